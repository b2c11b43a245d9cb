//! Monotone lookup tables on a logarithmic abscissa with cubic Hermite interpolation.

/// Samples of `g(u) = f(e^u)` and `g'(u) = s f'(s)` on a uniform grid in `u = ln s`.
#[derive(Debug, Clone)]
pub struct LogTable {
    u0: f64,
    du: f64,
    vals: Vec<f64>,
    ders: Vec<f64>,
    s_min: f64,
    s_max: f64,
}

impl LogTable {
    /// Build from `nodes` log-spaced points on `[s_min, s_max]`.
    ///
    /// `segment(s_a, s_b)` must return `f(s_b) - f(s_a)`; `deriv(s)` returns `f'(s)`.
    /// The table accumulates segments from `f(s_min) = f_min`.
    pub fn build<S, D>(s_min: f64, s_max: f64, nodes: usize, f_min: f64, segment: S, deriv: D) -> Self
    where
        S: Fn(f64, f64) -> f64,
        D: Fn(f64) -> f64,
    {
        assert!(nodes >= 2 && s_min > 0.0 && s_max > s_min);
        let u0 = s_min.ln();
        let du = (s_max.ln() - u0) / (nodes - 1) as f64;
        let mut vals = Vec::with_capacity(nodes);
        let mut ders = Vec::with_capacity(nodes);
        let mut acc = f_min;
        let mut s_prev = s_min;
        for k in 0..nodes {
            let s = if k == nodes - 1 { s_max } else { (u0 + k as f64 * du).exp() };
            if k > 0 {
                acc += segment(s_prev, s);
            }
            vals.push(acc);
            ders.push(s * deriv(s));
            s_prev = s;
        }
        Self { u0, du, vals, ders, s_min, s_max }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.s_min && s <= self.s_max
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Value at the upper end of the table.
    pub fn last(&self) -> f64 {
        *self.vals.last().expect("table is non-empty")
    }

    /// Interpolated value; caller guarantees `contains(s)`.
    pub fn eval(&self, s: f64) -> f64 {
        let x = (s.ln() - self.u0) / self.du;
        let n = self.vals.len();
        let k = (x.floor().max(0.0) as usize).min(n - 2);
        let t = (x - k as f64).clamp(0.0, 1.0);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.vals[k]
            + h10 * self.du * self.ders[k]
            + h01 * self.vals[k + 1]
            + h11 * self.du * self.ders[k + 1]
    }
}
