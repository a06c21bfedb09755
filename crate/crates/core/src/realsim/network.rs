//! Whole-network real simulation: sources pre-share a frame, broadcast one
//! frame rebit to each party, prepare lifted states and the parties apply
//! lifted POVMs. Every step is logged with the subsystems it touched.

use serde::Serialize;

use super::{broadcast, check_dim, check_povm, frame_state, LiftedOperator, RealsimError};
use crate::bellnet::{Behavior, NetworkStrategy};
use crate::qmat::{
    conjugate_local, eigh, partial_trace_mat, permute_mat, DensityMatrix, Operator, RealMatrix,
};

/// A source emitting one subsystem per entry of `targets` (the receiving party).
#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub name: String,
    pub state: DensityMatrix,
    pub targets: Vec<usize>,
}

/// A party measuring everything it receives, ordered by source then by
/// subsystem. `settings[s]` is the POVM for setting `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct Party {
    pub name: String,
    pub settings: Vec<Vec<Operator>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub sources: Vec<Source>,
    pub parties: Vec<Party>,
}

/// `P(outcomes | settings)`: settings tuple (row-major over parties) outer,
/// outcome tuple inner.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
    pub p: Vec<f64>,
}

impl Distribution {
    pub fn max_abs_diff(&self, o: &Distribution) -> f64 {
        if self.settings != o.settings || self.outcomes != o.outcomes {
            return f64::INFINITY;
        }
        self.p.iter().zip(&o.p).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }
}

impl Network {
    /// The bilocal wiring: `S1 -> (Alice, Bob)`, `S2 -> (Bob, Charlie)`.
    pub fn bilocal(s: &NetworkStrategy) -> Network {
        Network {
            sources: vec![
                Source {
                    name: "S1".into(),
                    state: s.source1.clone(),
                    targets: vec![0, 1],
                },
                Source {
                    name: "S2".into(),
                    state: s.source2.clone(),
                    targets: vec![1, 2],
                },
            ],
            parties: vec![
                Party {
                    name: "Alice".into(),
                    settings: s.alice.clone(),
                },
                Party {
                    name: "Bob".into(),
                    settings: vec![s.bob.clone()],
                },
                Party {
                    name: "Charlie".into(),
                    settings: s.charlie.clone(),
                },
            ],
        }
    }

    /// Source `k` sends one half to leaf `k` and the other to a central party
    /// (the last party), which measures all halves jointly.
    pub fn star(leaves: Vec<(DensityMatrix, Vec<Vec<Operator>>)>, center: Vec<Vec<Operator>>) -> Network {
        let m = leaves.len();
        let mut sources = Vec::with_capacity(m);
        let mut parties = Vec::with_capacity(m + 1);
        for (k, (state, povms)) in leaves.into_iter().enumerate() {
            sources.push(Source {
                name: format!("S{}", k + 1),
                state,
                targets: vec![k, m],
            });
            parties.push(Party {
                name: format!("Leaf{}", k + 1),
                settings: povms,
            });
        }
        parties.push(Party {
            name: "Center".into(),
            settings: center,
        });
        Network { sources, parties }
    }

    /// Subsystems received by party `p`, as `(source, factor)` in order.
    fn inputs(&self, p: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, s) in self.sources.iter().enumerate() {
            for (j, &t) in s.targets.iter().enumerate() {
                if t == p {
                    out.push((k, j));
                }
            }
        }
        out
    }

    fn party_dim(&self, p: usize) -> usize {
        self.inputs(p)
            .iter()
            .map(|&(k, j)| self.sources[k].state.dims()[j])
            .product()
    }

    pub fn validate(&self) -> Result<(), RealsimError> {
        let np = self.parties.len();
        if self.sources.is_empty() || np == 0 {
            return Err(RealsimError::Wiring("need at least one source and one party".into()));
        }
        for s in &self.sources {
            if s.state.dims().len() != s.targets.len() {
                return Err(RealsimError::Wiring(format!(
                    "{} has {} factors but {} targets",
                    s.name,
                    s.state.dims().len(),
                    s.targets.len()
                )));
            }
            if let Some(&t) = s.targets.iter().find(|&&t| t >= np) {
                return Err(RealsimError::Wiring(format!("{} targets missing party {t}", s.name)));
            }
        }
        for (p, party) in self.parties.iter().enumerate() {
            if self.inputs(p).is_empty() {
                return Err(RealsimError::Wiring(format!("{} receives nothing", party.name)));
            }
            let d = self.party_dim(p);
            let outcomes = party.settings.first().map(|e| e.len());
            if party.settings.is_empty() {
                return Err(RealsimError::Wiring(format!("{} has no settings", party.name)));
            }
            for (s, e) in party.settings.iter().enumerate() {
                if Some(e.len()) != outcomes {
                    return Err(RealsimError::Wiring(format!("{} setting {s} has a different outcome count", party.name)));
                }
                if e.iter().any(|x| x.nrows() != d) {
                    return Err(RealsimError::Wiring(format!("{} setting {s} is not {d}-dimensional", party.name)));
                }
                check_povm(e).map_err(|err| RealsimError::InvalidPovm(format!("{} setting {s}: {err}", party.name)))?;
            }
        }
        Ok(())
    }

    /// Source factors reordered into party blocks.
    fn party_order(&self) -> Vec<(usize, usize)> {
        (0..self.parties.len()).flat_map(|p| self.inputs(p)).collect()
    }
}

/// Probabilities for a state already grouped into one block per party.
fn joint_probs(rho: &Operator, blocks: &[usize], povms: &[Vec<Vec<Operator>>]) -> Distribution {
    let settings: Vec<usize> = povms.iter().map(|p| p.len()).collect();
    let outcomes: Vec<usize> = povms.iter().map(|p| p[0].len()).collect();
    let total_o: usize = outcomes.iter().product();
    let total_s: usize = settings.iter().product();
    let mut p = vec![0.0; total_s * total_o];
    fn rec(
        level: usize,
        rho: &Operator,
        blocks: &[usize],
        povms: &[Vec<Vec<Operator>>],
        s_idx: usize,
        o_idx: usize,
        total_o: usize,
        p: &mut [f64],
    ) {
        let dims = &blocks[level..];
        let last = level + 1 == blocks.len();
        for (s, povm) in povms[level].iter().enumerate() {
            let si = s_idx * povms[level].len() + s;
            for (o, e) in povm.iter().enumerate() {
                let oi = o_idx * povm.len() + o;
                if last {
                    // Remaining multipliers are 1 at the last level.
                    p[si * total_o + oi] = e.trace_prod_re(rho);
                } else {
                    let t = crate::qmat::apply_local(e, rho, dims, &[0]);
                    let keep: Vec<usize> = (1..dims.len()).collect();
                    let r = t.map_linear(|m| partial_trace_mat(m, dims, &keep));
                    rec(level + 1, &r, blocks, povms, si, oi, total_o, p);
                }
            }
        }
    }
    rec(0, rho, blocks, povms, 0, 0, total_o, &mut p);
    Distribution { settings, outcomes, p }
}

/// Born-rule distribution of the complex network.
pub fn complex_distribution(net: &Network) -> Result<Distribution, RealsimError> {
    net.validate()?;
    let mut joint: Option<DensityMatrix> = None;
    for s in &net.sources {
        joint = Some(match joint {
            None => s.state.clone(),
            Some(j) => j.tensor(&s.state),
        });
    }
    let joint = joint.expect("nonempty");
    let mut start = Vec::new();
    let mut acc = 0;
    for s in &net.sources {
        start.push(acc);
        acc += s.targets.len();
    }
    let perm: Vec<usize> = net.party_order().iter().map(|&(k, j)| start[k] + j).collect();
    let ordered = joint.permute(&perm)?;
    let blocks: Vec<usize> = (0..net.parties.len()).map(|p| net.party_dim(p)).collect();
    let povms: Vec<Vec<Vec<Operator>>> = net.parties.iter().map(|p| p.settings.clone()).collect();
    Ok(joint_probs(ordered.op(), &blocks, &povms))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditEntry {
    pub actor: String,
    pub operation: String,
    /// Indices into [`Audit::subsystems`].
    pub touched: Vec<usize>,
}

/// Party `party` received frame rebit `rebit` from source `source`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameLink {
    pub party: usize,
    pub source: usize,
    pub rebit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Audit {
    pub subsystems: Vec<String>,
    pub entries: Vec<AuditEntry>,
    pub frame_registry: Vec<FrameLink>,
    /// Entries touching a subsystem the actor did not hold at the time.
    pub locality_violations: usize,
    /// Distance of the sources' frame marginal after broadcasting from the
    /// pre-shared frame state (max entry).
    pub source_marginal_deviation: f64,
}

impl Audit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("audit serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Actor {
    Source(usize),
    Party(usize),
}

struct Sub {
    name: String,
    dim: usize,
    owner: Actor,
}

/// Real state with a registry of named subsystems and an operation log.
struct Lab<'a> {
    net: &'a Network,
    subs: Vec<Sub>,
    /// Registry ids in the order of the state's factors.
    live: Vec<usize>,
    state: DensityMatrix,
    entries: Vec<AuditEntry>,
    violations: usize,
}

impl Lab<'_> {
    fn actor_name(&self, a: Actor) -> String {
        match a {
            Actor::Source(k) => self.net.sources[k].name.clone(),
            Actor::Party(p) => self.net.parties[p].name.clone(),
        }
    }

    fn log(&mut self, actor: Actor, operation: &str, touched: Vec<usize>) {
        if touched.iter().any(|&t| self.subs[t].owner != actor) {
            self.violations += 1;
        }
        self.entries.push(AuditEntry {
            actor: self.actor_name(actor),
            operation: operation.into(),
            touched,
        });
    }

    fn pos(&self, id: usize) -> usize {
        self.live.iter().position(|&l| l == id).expect("live subsystem")
    }

    fn register(&mut self, name: String, dim: usize, owner: Actor) -> usize {
        self.subs.push(Sub { name, dim, owner });
        self.subs.len() - 1
    }

    fn broadcast(&mut self, actor: Actor, from: usize, name: String, owner: Actor) -> Result<usize, RealsimError> {
        self.state = broadcast(&self.state, self.pos(from))?;
        let id = self.register(name, 2, owner);
        self.live.push(id);
        self.log(actor, "broadcast", vec![from, id]);
        Ok(id)
    }

    fn trace_out(&mut self, actor: Actor, ids: &[usize], operation: &str) -> Result<(), RealsimError> {
        let keep: Vec<usize> = (0..self.live.len()).filter(|&k| !ids.contains(&self.live[k])).collect();
        self.state = self.state.partial_trace(&keep)?;
        self.live = keep.iter().map(|&k| self.live[k]).collect();
        self.log(actor, operation, ids.to_vec());
        Ok(())
    }

    fn transfer(&mut self, from: Actor, id: usize, to: Actor) {
        self.log(from, "send", vec![id]);
        self.subs[id].owner = to;
    }

    /// Lifted replace channel `X -> tr(X) rho` on `sys`, with `J` on `frame`.
    fn prepare(&mut self, k: usize, sys: &[usize], frame: usize) -> Result<(), RealsimError> {
        let rho = &self.net.sources[k].state;
        let d = rho.dim();
        let (vals, vecs) = eigh(rho.op())?;
        let dims = self.state.dims().to_vec();
        let mut sites: Vec<usize> = sys.iter().map(|&i| self.pos(i)).collect();
        sites.push(self.pos(frame));
        let mut acc = RealMatrix::zeros(self.state.dim(), self.state.dim());
        let mut kraus = 0;
        for (j, &l) in vals.iter().enumerate() {
            if l <= 1e-15 {
                continue;
            }
            let psi = vecs.map_linear(|m| m.columns(j, 1) * l.sqrt());
            for col in 0..d {
                let mut bra = RealMatrix::zeros(1, d);
                bra[(0, col)] = 1.0;
                let k_op = psi.mul(&Operator::Real(bra));
                let lifted = LiftedOperator::new(&k_op).op();
                let t = conjugate_local(&lifted, self.state.op(), &dims, &sites);
                acc += t.as_real().expect("real carrier");
                kraus += 1;
            }
        }
        log::debug!("{} prepares with {kraus} lifted Kraus operators", self.net.sources[k].name);
        self.state = DensityMatrix::new_unchecked(dims, Operator::Real(acc))?;
        let mut touched = sys.to_vec();
        touched.push(frame);
        self.log(Actor::Source(k), "prepare", touched);
        Ok(())
    }
}

/// The real model: state grouped into party blocks (each party's systems
/// followed by its frame rebit) and the lifted POVMs.
#[derive(Clone, Debug)]
pub struct RealModel {
    pub state: DensityMatrix,
    /// Fine subsystem dims of `state`.
    pub fine_dims: Vec<usize>,
    /// Position of each party's frame rebit among `fine_dims`.
    pub frame_sites: Vec<usize>,
    pub povms: Vec<Vec<Vec<Operator>>>,
    pub audit: Audit,
}

impl RealModel {
    pub fn distribution(&self) -> Distribution {
        joint_probs(self.state.op(), self.state.dims(), &self.povms)
    }

    /// Reduced state of the frame rebits of `parties`.
    pub fn frame_marginal(&self, parties: &[usize]) -> Result<DensityMatrix, RealsimError> {
        let fine = DensityMatrix::new_unchecked(self.fine_dims.clone(), self.state.op().clone())?;
        let keep: Vec<usize> = parties.iter().map(|&p| self.frame_sites[p]).collect();
        Ok(fine.partial_trace(&keep)?)
    }
}

/// Builds the real model of a network.
///
/// Sources pre-share `frame_state(m)`. Each party gets one frame rebit,
/// broadcast by the lowest-numbered source connected to it; each source
/// also broadcasts a working rebit that hosts `J` while it prepares its
/// lifted state and is discarded afterwards. The sources' own rebits are
/// untouched after broadcasting and are set aside for reuse.
pub fn simulate_real(net: &Network) -> Result<RealModel, RealsimError> {
    net.validate()?;
    let m = net.sources.len();
    let np = net.parties.len();
    let pre = frame_state(m)?;
    let mut lab = Lab {
        net,
        subs: Vec::new(),
        live: Vec::new(),
        state: pre.clone(),
        entries: Vec::new(),
        violations: 0,
    };
    let roots: Vec<usize> = (0..m)
        .map(|k| lab.register(format!("{}.frame", net.sources[k].name), 2, Actor::Source(k)))
        .collect();
    lab.live = roots.clone();

    let mut registry = Vec::new();
    let mut party_frame = vec![0; np];
    for p in 0..np {
        let k = net.inputs(p)[0].0;
        let name = format!("{}.frame", net.parties[p].name);
        let id = lab.broadcast(Actor::Source(k), roots[k], name, Actor::Source(k))?;
        party_frame[p] = id;
        registry.push(FrameLink {
            party: p,
            source: k,
            rebit: id,
        });
    }
    let mut work = Vec::with_capacity(m);
    for k in 0..m {
        let name = format!("{}.work", net.sources[k].name);
        work.push(lab.broadcast(Actor::Source(k), roots[k], name, Actor::Source(k))?);
    }
    check_dim(lab.state.dim())?;

    let root_pos: Vec<usize> = roots.iter().map(|&r| lab.pos(r)).collect();
    let marginal = lab.state.partial_trace(&root_pos)?;
    let deviation = marginal.op().max_abs_diff(pre.op());
    for k in 0..m {
        lab.trace_out(Actor::Source(k), &[roots[k]], "set aside for reuse")?;
    }

    for k in 0..m {
        let src = &net.sources[k];
        let mut ids = Vec::new();
        for (j, &d) in src.state.dims().iter().enumerate() {
            let id = lab.register(format!("{}.{}", src.name, j), d, Actor::Source(k));
            ids.push(id);
        }
        let d = src.state.dim();
        check_dim(lab.state.dim() * d)?;
        let mut zero = RealMatrix::zeros(d, d);
        zero[(0, 0)] = 1.0;
        let fresh = DensityMatrix::new_unchecked(src.state.dims().to_vec(), Operator::Real(zero))?;
        lab.state = lab.state.tensor(&fresh);
        lab.live.extend(&ids);
        lab.log(Actor::Source(k), "initialize", ids.clone());
        lab.prepare(k, &ids, work[k])?;
        lab.trace_out(Actor::Source(k), &[work[k]], "discard")?;
        for (j, &t) in src.targets.iter().enumerate() {
            lab.transfer(Actor::Source(k), ids[j], Actor::Party(t));
        }
    }
    for (p, &id) in party_frame.iter().enumerate() {
        let owner = lab.subs[id].owner;
        lab.transfer(owner, id, Actor::Party(p));
    }

    // Regroup: each party's systems, then its frame rebit.
    let mut order = Vec::new();
    let mut frame_sites = Vec::with_capacity(np);
    let mut blocks = Vec::with_capacity(np);
    for p in 0..np {
        let mine: Vec<usize> = lab
            .live
            .iter()
            .copied()
            .filter(|&id| lab.subs[id].owner == Actor::Party(p) && id != party_frame[p])
            .collect();
        blocks.push(mine.iter().map(|&id| lab.subs[id].dim).product::<usize>() * 2);
        order.extend(mine);
        frame_sites.push(order.len());
        order.push(party_frame[p]);
    }
    let perm: Vec<usize> = order.iter().map(|&id| lab.pos(id)).collect();
    let fine_dims: Vec<usize> = order.iter().map(|&id| lab.subs[id].dim).collect();
    let cur = lab.state.dims().to_vec();
    let op = lab.state.op().map_linear(|x| permute_mat(x, &cur, &perm));
    let state = DensityMatrix::new_unchecked(blocks, op)?;

    let povms = net
        .parties
        .iter()
        .map(|party| {
            party
                .settings
                .iter()
                .map(|e| e.iter().map(|x| LiftedOperator::new(x).op()).collect())
                .collect()
        })
        .collect();

    let audit = Audit {
        subsystems: lab.subs.iter().map(|s| s.name.clone()).collect(),
        entries: lab.entries,
        frame_registry: registry,
        locality_violations: lab.violations,
        source_marginal_deviation: deviation,
    };
    Ok(RealModel {
        state,
        fine_dims,
        frame_sites,
        povms,
        audit,
    })
}

/// Real model of the bilocal network (kept for inspection).
pub fn simulate_network_model(s: &NetworkStrategy) -> Result<RealModel, RealsimError> {
    simulate_real(&Network::bilocal(s))
}

/// Behavior of the bilocal network computed entirely in the real model.
pub fn simulate_network(s: &NetworkStrategy) -> Result<(Behavior, Audit), RealsimError> {
    let model = simulate_network_model(s)?;
    let d = model.distribution();
    Ok((Behavior::new(d.p)?, model.audit))
}
