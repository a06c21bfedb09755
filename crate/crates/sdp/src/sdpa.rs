//! SDPA sparse format (`.dat-s`).
//!
//! A problem `max/min <C, X> s.t. <A_i, X> = b_i` is written as the SDPA dual
//! `max <F0, Y> s.t. <F_i, Y> = c_i` with `Y = X`, `F_i = A_i`, `c_i = b_i` and
//! `F0 = C` (or `-C` for minimization). Leading comment lines record the sense
//! and the block names so that [`read_sdpa`] restores the problem exactly:
//!
//! ```text
//! * sense=min
//! * block 1 X psd
//! 1
//! 1
//! 2
//! 1
//! 0 1 1 1 -1
//! 1 1 1 1 1
//! ```
//!
//! Free blocks are split into a diagonal block twice their size (positive part
//! first). Inequality constraints cannot be expressed and are rejected.

use std::fmt::Write as _;
use std::path::Path;

use crate::problem::{BlockKind, Relation, SdpProblem, Sense, SymSparse};
use crate::{Constraint, SdpError};

pub fn write_sdpa(p: &SdpProblem) -> Result<String, SdpError> {
    p.validate()?;
    if let Some(k) = p.constraints.iter().position(|c| c.relation == Relation::Le) {
        return Err(SdpError::InequalityInExport(k));
    }
    let mut q = p.clone();
    q.canonicalize();

    let mut out = String::new();
    let sense = match q.sense {
        Sense::Min => "min",
        Sense::Max => "max",
    };
    writeln!(out, "* sense={sense}").unwrap();
    for (k, b) in q.blocks.iter().enumerate() {
        let kind = match b.kind {
            BlockKind::Psd => "psd",
            BlockKind::Diagonal => "diagonal",
            BlockKind::Free => "free",
        };
        let name = if b.name.chars().any(char::is_whitespace) || b.name.is_empty() {
            format!("block_{}", k + 1)
        } else {
            b.name.clone()
        };
        writeln!(out, "* block {} {} {}", k + 1, name, kind).unwrap();
    }
    writeln!(out, "{}", q.constraints.len()).unwrap();
    writeln!(out, "{}", q.blocks.len()).unwrap();
    let sizes: Vec<String> = q
        .blocks
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => b.size.to_string(),
            BlockKind::Diagonal => format!("-{}", b.size),
            BlockKind::Free => format!("-{}", 2 * b.size),
        })
        .collect();
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let rhs: Vec<String> = q.constraints.iter().map(|c| fmt_num(c.rhs)).collect();
    writeln!(out, "{}", rhs.join(" ")).unwrap();

    let f0_sign = match q.sense {
        Sense::Min => -1.0,
        Sense::Max => 1.0,
    };
    write_terms(&mut out, 0, &q.objective, f0_sign, &q);
    for (k, c) in q.constraints.iter().enumerate() {
        write_terms(&mut out, k + 1, &c.terms, 1.0, &q);
    }
    Ok(out)
}

fn write_terms(out: &mut String, matno: usize, terms: &[(usize, SymSparse)], s: f64, q: &SdpProblem) {
    for (b, m) in terms {
        let blk = &q.blocks[*b];
        for &(i, j, v) in m.entries() {
            let v = s * v;
            writeln!(out, "{} {} {} {} {}", matno, b + 1, i + 1, j + 1, fmt_num(v)).unwrap();
            if blk.kind == BlockKind::Free {
                let n = blk.size;
                writeln!(out, "{} {} {} {} {}", matno, b + 1, n + i + 1, n + j + 1, fmt_num(-v))
                    .unwrap();
            }
        }
    }
}

fn fmt_num(v: f64) -> String {
    // Display is the shortest representation that parses back exactly.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn write_sdpa_file(p: &SdpProblem, path: impl AsRef<Path>) -> Result<(), SdpError> {
    std::fs::write(path, write_sdpa(p)?)?;
    Ok(())
}

pub fn read_sdpa_file(path: impl AsRef<Path>) -> Result<SdpProblem, SdpError> {
    read_sdpa(&std::fs::read_to_string(path)?)
}

/// Parses SDPA sparse text. Without a `* sense=` comment the problem is read as
/// the SDPA dual, i.e. maximization of `<F0, Y>`.
pub fn read_sdpa(text: &str) -> Result<SdpProblem, SdpError> {
    let mut sense = Sense::Max;
    let mut names: Vec<(usize, String, Option<BlockKind>)> = Vec::new();
    let mut tokens: Vec<(usize, String)> = Vec::new();
    let mut header_done = false;

    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let t = line.trim();
        if !header_done && (t.starts_with('*') || t.starts_with('"')) {
            let body = t.trim_start_matches(['*', '"']).trim();
            if let Some(s) = body.strip_prefix("sense=") {
                sense = match s.trim() {
                    "min" => Sense::Min,
                    "max" => Sense::Max,
                    other => {
                        return Err(SdpError::Parse {
                            line: line_no,
                            msg: format!("unknown sense '{other}'"),
                        })
                    }
                };
            } else if let Some(rest) = body.strip_prefix("block ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() >= 2 {
                    if let Ok(k) = parts[0].parse::<usize>() {
                        let kind = parts.get(2).and_then(|s| match *s {
                            "psd" => Some(BlockKind::Psd),
                            "diagonal" => Some(BlockKind::Diagonal),
                            "free" => Some(BlockKind::Free),
                            _ => None,
                        });
                        names.push((k, parts[1].to_string(), kind));
                    }
                }
            }
            continue;
        }
        if t.is_empty() {
            continue;
        }
        header_done = true;
        let cleaned: String = t
            .chars()
            .map(|c| if matches!(c, ',' | '{' | '}' | '(' | ')') { ' ' } else { c })
            .collect();
        for tok in cleaned.split_whitespace() {
            tokens.push((line_no, tok.to_string()));
        }
    }

    let mut cur = Cursor { tokens: &tokens, pos: 0 };
    let mut next = |what: &str| cur.next(what);
    fn int(t: (usize, String)) -> Result<i64, SdpError> {
        t.1.parse::<i64>().map_err(|_| SdpError::Parse {
            line: t.0,
            msg: format!("expected integer, found '{}'", t.1),
        })
    }
    fn num(t: (usize, String)) -> Result<f64, SdpError> {
        t.1.parse::<f64>().map_err(|_| SdpError::Parse {
            line: t.0,
            msg: format!("expected number, found '{}'", t.1),
        })
    }

    let m = int(next("number of constraints")?)?;
    let nb = int(next("number of blocks")?)?;
    if m < 0 || nb <= 0 {
        return Err(SdpError::Parse {
            line: 1,
            msg: "bad header counts".into(),
        });
    }
    let (m, nb) = (m as usize, nb as usize);
    let mut p = SdpProblem::new(sense);
    let mut free_half = vec![None; nb];
    for k in 0..nb {
        let t = next("block size")?;
        let line = t.0;
        let s = int(t)?;
        if s == 0 {
            return Err(SdpError::Parse {
                line,
                msg: "zero block size".into(),
            });
        }
        let named = names.iter().find(|(i, _, _)| *i == k + 1);
        let name = named
            .map(|n| n.1.clone())
            .unwrap_or_else(|| format!("block_{}", k + 1));
        let declared = named.and_then(|n| n.2);
        if s > 0 {
            p.add_block(name, s as usize, BlockKind::Psd);
        } else if declared == Some(BlockKind::Free) && s % 2 == 0 {
            let n = (-s / 2) as usize;
            free_half[k] = Some(n);
            p.add_block(name, n, BlockKind::Free);
        } else {
            p.add_block(name, (-s) as usize, BlockKind::Diagonal);
        }
    }
    let mut cons: Vec<Constraint> = Vec::with_capacity(m);
    for _ in 0..m {
        cons.push(Constraint::eq(num(next("rhs value")?)?));
    }
    let f0_sign = match sense {
        Sense::Min => -1.0,
        Sense::Max => 1.0,
    };

    loop {
        let t = match next("matrix number") {
            Ok(t) => t,
            Err(_) => break,
        };
        let line = t.0;
        let matno = int(t)?;
        let blk = int(next("block number")?)?;
        let i = int(next("row")?)?;
        let j = int(next("column")?)?;
        let v = num(next("value")?)?;
        if matno < 0 || matno as usize > m || blk < 1 || blk as usize > nb || i < 1 || j < 1 {
            return Err(SdpError::Parse {
                line,
                msg: "entry index out of range".into(),
            });
        }
        let b = blk as usize - 1;
        let (mut i, mut j) = (i as usize - 1, j as usize - 1);
        let side = match free_half[b] {
            Some(n) => 2 * n,
            None => p.blocks[b].size,
        };
        if i >= side || j >= side {
            return Err(SdpError::Parse {
                line,
                msg: format!("entry ({}, {}) outside block {blk}", i + 1, j + 1),
            });
        }
        if p.blocks[b].kind != BlockKind::Psd && i != j {
            return Err(SdpError::Parse {
                line,
                msg: "off-diagonal entry in a diagonal block".into(),
            });
        }
        if let Some(n) = free_half[b] {
            // The negative half mirrors the positive one.
            if i >= n {
                continue;
            }
            j = i;
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if matno == 0 {
            p.add_objective(b, i, j, f0_sign * v);
        } else {
            cons[matno as usize - 1].add(b, i, j, v);
        }
    }
    for c in cons {
        p.add_constraint(c);
    }
    p.canonicalize();
    p.validate()?;
    Ok(p)
}

struct Cursor<'a> {
    tokens: &'a [(usize, String)],
    pos: usize,
}

impl Cursor<'_> {
    fn next(&mut self, what: &str) -> Result<(usize, String), SdpError> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| SdpError::Parse {
            line: self.tokens.last().map(|t| t.0).unwrap_or(0),
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_sense_defaults_to_max() {
        let p = read_sdpa("1\n1\n2\n1.0\n0 1 1 1 2\n1 1 1 1 1\n1 1 2 2 1\n").unwrap();
        assert_eq!(p.sense, Sense::Max);
        assert_eq!(p.objective[0].1.entries(), &[(0, 0, 2.0)]);
        assert_eq!(p.constraints[0].terms[0].1.nnz(), 2);
    }

    #[test]
    fn inequality_is_rejected() {
        let mut p = SdpProblem::new(Sense::Min);
        let x = p.add_block("X", 1, BlockKind::Psd);
        p.add_constraint(Constraint::le(1.0).with(x, 0, 0, 1.0));
        assert!(matches!(write_sdpa(&p), Err(SdpError::InequalityInExport(0))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = read_sdpa("1\n1\n2\n1.0\n1 1 1 x 1\n").unwrap_err();
        match err {
            SdpError::Parse { line, .. } => assert_eq!(line, 5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn free_block_survives_round_trip() {
        let mut p = SdpProblem::new(Sense::Min);
        let t = p.add_block("t", 2, BlockKind::Free);
        p.add_objective(t, 1, 1, 1.0);
        p.add_constraint(Constraint::eq(1.0).with(t, 0, 0, 1.0).with(t, 1, 1, -2.0));
        let text = write_sdpa(&p).unwrap();
        assert!(text.contains("\n-4\n"));
        let mut q = read_sdpa(&text).unwrap();
        p.canonicalize();
        q.canonicalize();
        assert_eq!(p, q);
    }
}
