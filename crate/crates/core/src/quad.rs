//! One-dimensional quadrature helpers in `f64`.

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed-order Gauss–Legendre rule mapped to an interval.
pub struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.x.iter().zip(&self.w) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// Points and weights of the rule mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.x.iter().zip(&self.w).map(move |(x, w)| (mid + half * x, w * half))
    }
}

const MAX_PIECES: usize = 4000;

/// Globally adaptive bisection with a 10-point Gauss rule. The piece with the
/// largest error estimate is split until the summed estimate falls below
/// `rel_tol` times the integral or the piece budget runs out.
pub fn adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rule = Rule::new(10);
    let mut pieces = vec![estimate(&rule, f, a, b)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.error).sum();
        if err <= rel_tol * total.abs() || err == 0.0 || pieces.len() >= MAX_PIECES {
            return total;
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.lo + p.hi);
        if m <= p.lo || m >= p.hi {
            return total;
        }
        pieces.push(estimate(&rule, f, p.lo, m));
        pieces.push(estimate(&rule, f, m, p.hi));
    }
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn estimate(rule: &Rule, f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Piece {
    let m = 0.5 * (lo + hi);
    let whole = rule.integrate(f, lo, hi);
    let value = rule.integrate(f, lo, m) + rule.integrate(f, m, hi);
    Piece {
        lo,
        hi,
        value,
        error: (value - whole).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        for n in [1, 2, 5, 8, 10] {
            let rule = Rule::new(n);
            let deg = 2 * n - 1;
            let got = rule.integrate(&mut |x| x.powi(deg as i32) + x.powi((deg - 1) as i32), 0.0, 1.0);
            let want = 1.0 / (deg + 1) as f64 + 1.0 / deg as f64;
            assert!((got - want).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let got = adaptive(&mut |x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10);
        assert!((got - 2.0).abs() < 1e-8);
    }
}
