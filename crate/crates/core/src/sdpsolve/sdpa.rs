//! SDPA sparse listing of real problems.
//!
//! The file is the SDPA dual `max Tr[F0 Y] s.t. Tr[F_k Y] = c_k, Y ⪰ 0`, so a
//! standard-form problem is written with F0 = −C, F_k = A_k and c_k = b_k.
//! Values are printed with 17 significant digits, which reads back to the
//! same doubles.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::matcore::ComplexMatrix;

use super::{BlockMatrix, Constraint, SdpProblem};

fn push_entries(out: &mut String, k: usize, m: &BlockMatrix, sign: f64) {
    for (blk, b) in m.blocks().iter().enumerate() {
        for i in 0..b.rows() {
            for j in i..b.cols() {
                let v = sign * b[(i, j)].re;
                if v != 0.0 {
                    let _ = writeln!(out, "{k} {} {} {} {v:.16e}", blk + 1, i + 1, j + 1);
                }
            }
        }
    }
}

/// Writes `p`; complex data are rejected.
pub fn write_sdpa(p: &SdpProblem) -> Result<String> {
    if !p.is_real() {
        return invalid("the SDPA listing supports real symmetric data only");
    }
    let mut out = String::new();
    out.push_str("* standard form: F0 = -C, F_k = A_k, c_k = b_k\n");
    let _ = writeln!(out, "{}", p.constraints().len());
    let _ = writeln!(out, "{}", p.sizes().len());
    let sizes: Vec<String> = p.sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let b: Vec<String> = p.constraints().iter().map(|c| format!("{:.16e}", c.b)).collect();
    let _ = writeln!(out, "{}", b.join(" "));
    push_entries(&mut out, 0, p.objective(), -1.0);
    for (k, c) in p.constraints().iter().enumerate() {
        push_entries(&mut out, k + 1, &c.a, 1.0);
    }
    Ok(out)
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("SDPA line {line}: {msg}"))
}

/// Reads a listing produced by [`write_sdpa`] or any SDPA sparse file with
/// dense (positive-size) or diagonal (negative-size) blocks.
pub fn read_sdpa(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
    let mut tokens_of = |what: &str| -> Result<(usize, Vec<String>)> {
        let (n, l) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput(format!("SDPA: missing {what}")))?;
        let toks = l
            .split(|c: char| c.is_whitespace() || ",{}()".contains(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        Ok((n, toks))
    };

    let (n, t) = tokens_of("constraint count")?;
    let m: usize = t
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(n, "bad constraint count"))?;
    let (n, t) = tokens_of("block count")?;
    let nb: usize = t
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(n, "bad block count"))?;
    let (n, t) = tokens_of("block sizes")?;
    let raw_sizes: Vec<i64> = t
        .iter()
        .take(nb)
        .map(|s| s.parse().map_err(|_| parse_err(n, format!("bad block size {s:?}"))))
        .collect::<Result<_>>()?;
    if raw_sizes.len() != nb || raw_sizes.contains(&0) {
        return Err(parse_err(n, "block sizes do not match the block count"));
    }
    let sizes: Vec<usize> = raw_sizes.iter().map(|s| s.unsigned_abs() as usize).collect();
    let (n, t) = tokens_of("cost vector")?;
    let b: Vec<f64> = t
        .iter()
        .take(m)
        .map(|s| s.parse().map_err(|_| parse_err(n, format!("bad number {s:?}"))))
        .collect::<Result<_>>()?;
    if b.len() != m {
        return Err(parse_err(n, format!("expected {m} costs")));
    }

    let mut mats: Vec<Vec<ComplexMatrix>> = (0..=m)
        .map(|_| sizes.iter().map(|&s| ComplexMatrix::zeros(s, s)).collect())
        .collect();
    while let Ok((n, t)) = tokens_of("entry") {
        if t.len() < 5 {
            return Err(parse_err(n, "expected `k block i j value`"));
        }
        let idx = |s: &String| s.parse::<usize>().map_err(|_| parse_err(n, format!("bad index {s:?}")));
        let (k, blk, i, j) = (idx(&t[0])?, idx(&t[1])?, idx(&t[2])?, idx(&t[3])?);
        let v: f64 = t[4]
            .parse()
            .map_err(|_| parse_err(n, format!("bad value {:?}", t[4])))?;
        if k > m || blk == 0 || blk > nb || i == 0 || j == 0 || i > sizes[blk - 1] || j > sizes[blk - 1] {
            return Err(parse_err(n, "index out of range"));
        }
        if raw_sizes[blk - 1] < 0 && i != j {
            return Err(parse_err(n, "off-diagonal entry in a diagonal block"));
        }
        let mat = &mut mats[k][blk - 1];
        mat[(i - 1, j - 1)] = Complex64::new(v, 0.0);
        mat[(j - 1, i - 1)] = Complex64::new(v, 0.0);
    }

    let mut mats = mats.into_iter();
    let f0 = mats.next().expect("F0 present");
    let objective = BlockMatrix::from_blocks(f0.into_iter().map(|b| b.scale(-1.0)).collect());
    let constraints = mats
        .zip(b)
        .map(|(blocks, b)| Constraint {
            a: BlockMatrix::from_blocks(blocks),
            b,
        })
        .collect();
    SdpProblem::new(sizes, objective, constraints)
}
