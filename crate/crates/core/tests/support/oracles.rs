//! Reference implementations used only by tests. Each one is written from
//! the underlying equations without calling the library routine it checks.

#![allow(dead_code)]

use num_complex::Complex64;

pub type Rho = [[Complex64; 4]; 4];

#[derive(Debug, Clone, Copy)]
pub struct XSystem {
    pub gamma_big: f64,
    pub gamma_small: f64,
    pub detuning: f64,
    pub omega_r: Complex64,
    pub omega_l: Complex64,
}

/// The ten master equations for ρ11..ρ44, ρ12, ρ34, ρ24, ρ23, ρ14, ρ13;
/// the remaining entries follow from hermiticity.
pub fn master_rhs(x: &XSystem, r: &Rho) -> Rho {
    let i = Complex64::I;
    let (g, gs, d) = (x.gamma_big, x.gamma_small, x.detuning);
    let (or, ol) = (x.omega_r, x.omega_l);
    let half = (g + gs) / 2.0;
    let mut out = [[Complex64::ZERO; 4]; 4];
    out[0][0] = g * r[3][3] + gs * r[1][1] + i * or * r[0][1].conj() - i * or.conj() * r[0][1];
    out[1][1] = -(g + gs) * r[1][1] - i * or * r[0][1].conj() + i * or.conj() * r[0][1];
    out[2][2] = g * r[1][1] + gs * r[3][3] + i * ol * r[2][3].conj() - i * ol.conj() * r[2][3];
    out[3][3] = -(g + gs) * r[3][3] - i * ol * r[2][3].conj() + i * ol.conj() * r[2][3];
    out[0][1] = -(half + i * d) * r[0][1] - i * or * (r[0][0] - r[1][1]);
    out[2][3] = -(half + i * d) * r[2][3] - i * ol * (r[2][2] - r[3][3]);
    out[1][3] = i * or.conj() * r[0][3] - i * ol * r[1][2];
    out[1][2] = i * d * r[1][2] + i * or.conj() * r[0][2] - i * ol.conj() * r[1][3];
    out[0][3] = -i * d * r[0][3] + i * or * r[1][3] - i * ol * r[0][2];
    out[0][2] = i * or * r[1][2] - i * ol.conj() * r[0][3];
    for (a, b) in (0..4).flat_map(|a| (0..a).map(move |b| (a, b))) {
        out[a][b] = out[b][a].conj();
    }
    out
}

fn axpy(a: &Rho, s: f64, b: &Rho) -> Rho {
    let mut out = *a;
    for (row, brow) in out.iter_mut().zip(b) {
        for (x, y) in row.iter_mut().zip(brow) {
            *x += s * y;
        }
    }
    out
}

fn max_abs(r: &Rho) -> f64 {
    r.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Classical RK4 from the symmetric ground state until ‖ρ̇‖ < `tol`.
pub fn integrate_to_steady_state(x: &XSystem, dt: f64, tol: f64, max_steps: usize) -> Option<Rho> {
    let mut r = [[Complex64::ZERO; 4]; 4];
    r[0][0] = Complex64::new(0.5, 0.0);
    r[2][2] = Complex64::new(0.5, 0.0);
    for _ in 0..max_steps {
        let k1 = master_rhs(x, &r);
        if max_abs(&k1) < tol {
            return Some(r);
        }
        let k2 = master_rhs(x, &axpy(&r, dt / 2.0, &k1));
        let k3 = master_rhs(x, &axpy(&r, dt / 2.0, &k2));
        let k4 = master_rhs(x, &axpy(&r, dt, &k3));
        for a in 0..4 {
            for b in 0..4 {
                r[a][b] += dt / 6.0 * (k1[a][b] + 2.0 * k2[a][b] + 2.0 * k3[a][b] + k4[a][b]);
            }
        }
    }
    None
}

/// Circular-component indices in the intensity form, both components
/// nonzero. The overall sign is negative for the level ordering used here.
pub fn indices_from_intensities(c: f64, delta: f64, i_r: f64, i_l: f64) -> (f64, f64) {
    let a = 1.0 + 4.0 * delta * delta;
    let n_r = -c * delta / (a * i_r / i_l + (a + 4.0 * i_r));
    let n_l = -c * delta / (a + (a + 4.0 * i_r) * i_l / i_r);
    (n_r, n_l)
}

/// Roots of λ² − tr·λ + det for a real 2×2 matrix.
pub fn quadratic_eigenvalues(m: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

/// −Σ_{i<k} J_ik s_i s_k by direct summation.
pub fn energy(j: &[Vec<f64>], s: &[i8]) -> f64 {
    let mut e = 0.0;
    for a in 0..s.len() {
        for b in (a + 1)..s.len() {
            e -= j[a][b] * f64::from(s[a]) * f64::from(s[b]);
        }
    }
    e
}

/// Minimum energy over all 2^N configurations.
pub fn ground_energy(j: &[Vec<f64>]) -> f64 {
    let n = j.len();
    (0..1u64 << n)
        .map(|mask| {
            let s: Vec<i8> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                .collect();
            energy(j, &s)
        })
        .fold(f64::INFINITY, f64::min)
}
