//! Thermal (geometric) phonon-number distribution.

/// Default weight left in the discarded tail of the thermal distribution.
pub const DEFAULT_TAIL: f64 = 1e-10;

/// Occupation probability of Fock level `n` for a thermal state of mean `nbar`.
pub fn probability(n: usize, nbar: f64) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let q = nbar / (nbar + 1.0);
    q.powi(n as i32) / (nbar + 1.0)
}

/// Smallest `n` such that the weight above `n`, `(nbar/(nbar+1))^(n+1)`, is below `tail`.
pub fn cutoff(nbar: f64, tail: f64) -> usize {
    if nbar <= 0.0 {
        return 0;
    }
    let q = nbar / (nbar + 1.0);
    let mut n = ((tail.ln() / q.ln()).ceil() as usize).saturating_sub(1);
    while q.powi(n as i32 + 1) >= tail {
        n += 1;
    }
    while n > 0 && q.powi(n as i32) < tail {
        n -= 1;
    }
    n
}

/// Weight of levels strictly above `n_max`.
pub fn tail_weight(nbar: f64, n_max: usize) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    (nbar / (nbar + 1.0)).powi(n_max as i32 + 1)
}

/// `p_0 ..= p_{n_max}`.
pub fn distribution(nbar: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    if nbar == 0.0 {
        out.push(1.0);
        out.resize(n_max + 1, 0.0);
        return out;
    }
    let q = nbar / (nbar + 1.0);
    let mut p = 1.0 / (nbar + 1.0);
    for _ in 0..=n_max {
        out.push(p);
        p *= q;
    }
    out
}

/// `d p_n / d nbar` for `n = 0 ..= n_max`.
pub fn distribution_derivative(nbar: f64, n_max: usize) -> Vec<f64> {
    let p = distribution(nbar, n_max);
    p.iter()
        .enumerate()
        .map(|(n, &pn)| {
            if nbar == 0.0 {
                // p_0 = 1 - nbar + ..., p_1 = nbar + ...
                match n {
                    0 => -1.0,
                    1 => 1.0,
                    _ => 0.0,
                }
            } else {
                pn * (n as f64 / nbar - (n as f64 + 1.0) / (nbar + 1.0))
            }
        })
        .collect()
}
