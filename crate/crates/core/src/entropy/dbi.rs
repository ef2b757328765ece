use super::HardPartition;
use crate::error::{Error, Result};
use crate::ndmath::{Tape, Tensor, UnaryOp, Var, EPS};

/// Lower clamp for soft cluster masses.
pub const MASS_EPS: f64 = 1e-6;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Davies-Bouldin index of a hard partition of the rows of `x`.
pub fn dbi_hard(x: &Tensor, p: &HardPartition) -> Result<f64> {
    if p.len() != x.rows() {
        return Err(Error::Contract(format!(
            "partition covers {} points, features have {} rows",
            p.len(),
            x.rows()
        )));
    }
    let r = p.groups();
    if r < 2 {
        return Err(Error::Domain("DBI needs at least two clusters".into()));
    }
    let d = x.cols();
    let mut counts = vec![0usize; r];
    let mut centroids = vec![vec![0.0; d]; r];
    for (i, &k) in p.assignment().iter().enumerate() {
        counts[k] += 1;
        for (c, v) in centroids[k].iter_mut().zip(x.row(i)) {
            *c += v;
        }
    }
    for (c, &n) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut scatter = vec![0.0; r];
    for (i, &k) in p.assignment().iter().enumerate() {
        scatter[k] += sq_dist(x.row(i), &centroids[k]);
    }
    for (s, &n) in scatter.iter_mut().zip(&counts) {
        *s = (*s / n as f64).sqrt();
    }
    let mut total = 0.0;
    for k in 0..r {
        let worst = (0..r)
            .filter(|&m| m != k)
            .map(|m| {
                let dist = sq_dist(&centroids[k], &centroids[m]).sqrt().max(EPS);
                (scatter[k] + scatter[m]) / dist
            })
            .fold(f64::NEG_INFINITY, f64::max);
        total += worst;
    }
    Ok(total / r as f64)
}

/// Soft Davies-Bouldin index: counts become masses `sum_i Y_ik`, and the
/// max over partner clusters is taken on values with the gradient routed
/// through the selected branch.
pub fn dbi_soft(tape: &mut Tape, x: Var, y: Var) -> Result<Var> {
    let (n, _) = tape.shape(x);
    let (ny, r) = tape.shape(y);
    if ny != n {
        return Err(Error::Shape {
            op: "dbi_soft",
            left: tape.shape(x),
            right: tape.shape(y),
        });
    }
    if r < 2 {
        return Err(Error::Domain("DBI needs at least two clusters".into()));
    }

    let raw_mass = tape.col_sum(y);
    let mass = tape.unary(UnaryOp::ClampMin(MASS_EPS), raw_mass)?;
    let mass_col = tape.transpose(mass);
    let yt = tape.transpose(y);
    let sums = tape.matmul(yt, x)?;
    let centroids = tape.div_eps(sums, mass_col)?;

    let mut rows = Vec::with_capacity(r);
    let mut scatter = Vec::with_capacity(r);
    for k in 0..r {
        let ck = tape.row(centroids, k)?;
        let diff = tape.sub(x, ck)?;
        let sq = tape.square(diff);
        let dist = tape.row_sum(sq);
        let yk = tape.column(y, k)?;
        let weighted = tape.mul(dist, yk)?;
        let within = tape.sum_all(weighted);
        let mk = tape.column(mass, k)?;
        let var = tape.div_eps(within, mk)?;
        scatter.push(tape.sqrt(var)?);
        rows.push(ck);
    }

    let mut ratios = vec![vec![None; r]; r];
    for k in 0..r {
        for m in k + 1..r {
            let diff = tape.sub(rows[k], rows[m])?;
            let sq = tape.square(diff);
            let d2 = tape.sum_all(sq);
            let dist = tape.sqrt(d2)?;
            let spread = tape.add(scatter[k], scatter[m])?;
            let ratio = tape.div_eps(spread, dist)?;
            ratios[k][m] = Some(ratio);
            ratios[m][k] = Some(ratio);
        }
    }

    let mut worst = Vec::with_capacity(r);
    for row in &ratios {
        let best = row
            .iter()
            .flatten()
            .copied()
            .fold(None::<(Var, f64)>, |acc, v| {
                let val = tape.value(v).get(0, 0);
                match acc {
                    Some((_, b)) if b >= val => acc,
                    _ => Some((v, val)),
                }
            })
            .expect("r >= 2")
            .0;
        worst.push(best);
    }
    let mut acc = worst[0];
    for &w in &worst[1..] {
        acc = tape.add(acc, w)?;
    }
    Ok(tape.scale(acc, 1.0 / r as f64))
}
