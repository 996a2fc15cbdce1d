//! Closed-form matched solutions of the linear case (p = 2) with a step
//! potential `β 1_{[0, r0]}`; independent of the crate's solver paths.
#![allow(dead_code)]

pub mod configs;

/// Gaussian elimination with partial pivoting for a 3×3 system.
pub fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (x, y) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * y;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| m[row][c] * x[c]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x
}

/// n = 3: `u = a sinh(μr)/r` inside, `A + B/r` outside.
#[derive(Debug, Clone, Copy)]
pub struct Matched3d {
    pub mu: f64,
    pub r0: f64,
    pub a: f64,
    pub big_a: f64,
    pub big_b: f64,
}

impl Matched3d {
    /// `k = None` is the whole-space limit `u(∞) = 1`.
    pub fn new(beta: f64, r0: f64, k: Option<f64>) -> Self {
        let mu = beta.sqrt();
        let s = (mu * r0).sinh() / r0;
        let ds = mu * (mu * r0).cosh() / r0 - (mu * r0).sinh() / (r0 * r0);
        let inv_k = k.map_or(0.0, |k| 1.0 / k);
        let [a, big_a, big_b] = solve3(
            [
                [s, -1.0, -1.0 / r0],
                [ds, 0.0, 1.0 / (r0 * r0)],
                [0.0, 1.0, inv_k],
            ],
            [0.0, 0.0, 1.0],
        );
        Matched3d {
            mu,
            r0,
            a,
            big_a,
            big_b,
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        if r == 0.0 {
            self.a * self.mu
        } else if r <= self.r0 {
            self.a * (self.mu * r).sinh() / r
        } else {
            self.big_a + self.big_b / r
        }
    }

    pub fn du(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else if r <= self.r0 {
            self.a * (self.mu * (self.mu * r).cosh() / r - (self.mu * r).sinh() / (r * r))
        } else {
            -self.big_b / (r * r)
        }
    }

    pub fn alpha(&self) -> f64 {
        self.u(0.0)
    }

    /// `r² u'` beyond `r0`.
    pub fn tail_constant(&self) -> f64 {
        -self.big_b
    }
}

pub fn bessel_i0(x: f64) -> f64 {
    series(x, 0)
}

pub fn bessel_i1(x: f64) -> f64 {
    series(x, 1)
}

fn series(x: f64, order: i32) -> f64 {
    let y = 0.25 * x * x;
    let mut term = (0.5 * x).powi(order);
    for j in 1..=order {
        term /= j as f64;
    }
    let mut sum = term;
    for m in 1..200 {
        term *= y / (m as f64 * (m + order) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// n = 2: `u = a I0(μr)` inside, `A + B ln r` outside.
#[derive(Debug, Clone, Copy)]
pub struct Matched2d {
    pub mu: f64,
    pub r0: f64,
    pub a: f64,
    pub big_a: f64,
    pub big_b: f64,
}

impl Matched2d {
    pub fn new(beta: f64, r0: f64, k: f64) -> Self {
        let mu = beta.sqrt();
        let [a, big_a, big_b] = solve3(
            [
                [bessel_i0(mu * r0), -1.0, -r0.ln()],
                [mu * bessel_i1(mu * r0), 0.0, -1.0 / r0],
                [0.0, 1.0, k.ln()],
            ],
            [0.0, 0.0, 1.0],
        );
        Matched2d {
            mu,
            r0,
            a,
            big_a,
            big_b,
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        if r <= self.r0 {
            self.a * bessel_i0(self.mu * r)
        } else {
            self.big_a + self.big_b * r.ln()
        }
    }

    pub fn alpha(&self) -> f64 {
        self.a
    }

    /// `r u'` beyond `r0`.
    pub fn tail_constant(&self) -> f64 {
        self.big_b
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

// High-precision values of the matching systems (β = 4, r0 = 1), used to
// guard the f64 oracle above.
pub const ALPHA_3D_K16: f64 = 0.274_695_250_825_949_7;
pub const ALPHA_3D_K32: f64 = 0.270_175_579_599_741_6;
pub const ALPHA_3D_INF: f64 = 0.265_802_228_834_079_7;
pub const TAIL_3D_K16: f64 = 0.535_316_624_296_403_8;
pub const ALPHA_2D_K16: f64 = 0.090_090_504_741_548_92;
pub const ALPHA_2D_K32: f64 = 0.075_159_489_489_669_64;
pub const TAIL_2D_K16: f64 = 0.286_602_554_189_573_5;
/// `J(u_16) = 4π ∫_0^16 (u'² + b u²) r² dr` for the 3D matched solution.
pub const ENERGY_3D_K16: f64 = 6.726_987_096_936_278;
