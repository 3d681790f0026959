//! Straight-line re-implementations of one outer step of each solver, written
//! with plain nested vectors and scalar loops, compared against the library on
//! a tiny random instance.

use isvp_core::baseline::{alg1_initial_state, alg1_outer_step, alg1_skew_pair, cayley_orthogonalize};
use isvp_core::cayley_free::{
    chebyshev_update, correction_matrices, initial_state, multiplicative_refine, outer_step,
};
use isvp_core::harness::{generate_instance, perturb_c_star};
use isvp_core::{approx_jacobian, generalized_residual_vector, residual_d, IsvpInstance};
use nalgebra::{DMatrix, DVector};

type Mat = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

fn eye(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn from_na(m: &DMatrix<f64>) -> Mat {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn vec_from_na(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i][p] * b[p][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn tr(a: &Mat) -> Mat {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            out[j][i] = x;
        }
    }
    out
}

fn lin(a: &Mat, alpha: f64, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + alpha * y).collect())
        .collect()
}

fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn col_dot(a: &Mat, i: usize, b: &Mat, j: usize) -> f64 {
    (0..a.len()).map(|p| a[p][i] * b[p][j]).sum()
}

fn fro(a: &Mat) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting, many right-hand sides.
fn gauss_solve(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut a = a.clone();
    let mut b = b.clone();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            for j in 0..b[0].len() {
                b[i][j] -= f * b[k][j];
            }
        }
    }
    let mut x = zeros(n, b[0].len());
    for j in 0..b[0].len() {
        for i in (0..n).rev() {
            let mut s = b[i][j];
            for q in (i + 1)..n {
                s -= a[i][q] * x[q][j];
            }
            x[i][j] = s / a[i][i];
        }
    }
    x
}

struct Fixture {
    basis: Vec<Mat>,
    sigma: Vec<f64>,
    m: usize,
    n: usize,
}

impl Fixture {
    fn new(inst: &IsvpInstance) -> Self {
        Self {
            basis: (0..=inst.n()).map(|j| from_na(&inst.basis(j).clone_owned())).collect(),
            sigma: vec_from_na(inst.sigma_star()),
            m: inst.m(),
            n: inst.n(),
        }
    }

    fn a_of(&self, c: &[f64]) -> Mat {
        let mut a = self.basis[0].clone();
        for (i, ci) in c.iter().enumerate() {
            a = lin(&a, *ci, &self.basis[i + 1]);
        }
        a
    }

    /// `u_iᵀ M v_i − σ_i (‖u_i‖² + ‖v_i‖²)/2`.
    fn gres(&self, u: &Mat, v: &Mat, mat: &Mat) -> Vec<f64> {
        let mv = mul(mat, v);
        (0..self.n)
            .map(|i| col_dot(u, i, &mv, i) - self.sigma[i] * (col_dot(u, i, u, i) + col_dot(v, i, v, i)) / 2.0)
            .collect()
    }

    fn jac(&self, u: &Mat, v: &Mat) -> Mat {
        let mut j = zeros(self.n, self.n);
        for i in 0..self.n {
            for q in 0..self.n {
                let av = mul(&self.basis[q + 1], v);
                j[i][q] = col_dot(u, i, &av, i);
            }
        }
        j
    }

    fn uncorrected_offset(&self, u: &Mat, v: &Mat) -> Vec<f64> {
        let av = mul(&self.basis[0], v);
        (0..self.n).map(|i| col_dot(u, i, &av, i)).collect()
    }

    fn dist(&self, u: &Mat, a: &Mat, v: &Mat) -> f64 {
        let mut w = mul(&tr(u), &mul(a, v));
        for i in 0..self.n {
            w[i][i] -= self.sigma[i];
        }
        fro(&w)
    }

    fn corrections(&self, u: &Mat, v: &Mat, w: &Mat) -> (Mat, Mat) {
        let (m, n, s) = (self.m, self.n, &self.sigma);
        let gu = mul(&tr(u), u);
        let gv = mul(&tr(v), v);
        let mut x = zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                x[i][j] = if i == j {
                    (gu[i][i] - 1.0) / 2.0
                } else if i < n && j < n {
                    (s[i] * w[j][i] + s[j] * w[i][j] - s[j] * s[j] * gu[i][j] - s[i] * s[j] * gv[i][j])
                        / (s[i] * s[i] - s[j] * s[j])
                } else if j < n {
                    gu[i][j] - w[i][j] / s[j]
                } else if i < n {
                    w[j][i] / s[i]
                } else {
                    gu[i][j] / 2.0
                };
            }
        }
        let mut y = zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                y[i][j] = if i == j {
                    (gv[i][i] - 1.0) / 2.0
                } else {
                    (s[i] * w[i][j] + s[j] * w[j][i] - s[i] * s[j] * gu[i][j] - s[j] * s[j] * gv[j][i])
                        / (s[i] * s[i] - s[j] * s[j])
                };
            }
        }
        (x, y)
    }

    fn skew(&self, d: &Mat, s: &[f64]) -> (Mat, Mat) {
        let (m, n) = (self.m, self.n);
        let mut x = zeros(m, m);
        let mut y = zeros(n, n);
        for i in 0..m {
            for j in 0..n {
                if i < n && i < j {
                    let den = s[j] * s[j] - s[i] * s[i];
                    x[i][j] = (s[i] * d[j][i] + s[j] * d[i][j]) / den;
                    x[j][i] = -x[i][j];
                    y[i][j] = (s[i] * d[i][j] + s[j] * d[j][i]) / den;
                    y[j][i] = -y[i][j];
                } else if i >= n {
                    x[i][j] = d[i][j] / s[j];
                    x[j][i] = -x[i][j];
                }
            }
        }
        (x, y)
    }

    fn cayley(&self, q: &Mat, s: &Mat) -> Mat {
        let side = s.len();
        let lhs = lin(&eye(side), 0.5, s);
        let rhs = mul(&lin(&eye(side), -0.5, s), &tr(q));
        tr(&gauss_solve(&lhs, &rhs))
    }
}

fn chebyshev(b: &Mat, j: &Mat) -> Mat {
    let n = b.len();
    let jb = mul(j, b);
    let r = lin(&eye(n), -1.0, &jb);
    let t = lin(&lin(&eye(n), 1.0, &eye(n)), -1.0, &jb);
    lin(b, 1.0, &mul(b, &mul(&t, &r)))
}

fn rel_m(lib: &DMatrix<f64>, oracle: &Mat) -> f64 {
    let diff = lin(&from_na(lib), -1.0, oracle);
    fro(&diff) / fro(oracle).max(f64::MIN_POSITIVE)
}

fn rel_v(lib: &DVector<f64>, oracle: &[f64]) -> f64 {
    let num: f64 = lib.iter().zip(oracle).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn to_na(a: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

fn tiny(seed: u64, beta: f64) -> (IsvpInstance, DVector<f64>) {
    let (inst, c_star) = generate_instance(4, 2, seed).unwrap();
    let c0 = perturb_c_star(&c_star, beta, seed);
    (inst, c0)
}

fn check(label: &str, err: f64, tol: f64) {
    assert!(err <= tol, "{label}: relative error {err:e} exceeds {tol:e}");
}

#[test]
fn cayley_free_step_matches_straight_line_oracle() {
    const TOL: f64 = 1e-14;
    for seed in [3u64, 11, 29] {
        let (inst, c0) = tiny(seed, 5e-2);
        let fx = Fixture::new(&inst);
        let svd = isvp_core::full_svd(&inst.evaluate_a(&c0).unwrap()).unwrap();
        let j0 = approx_jacobian(&svd.u, &svd.v, &inst).unwrap();
        let b0 = j0.clone().try_inverse().unwrap();
        let (state, _) = initial_state(&inst, &c0, &b0).unwrap();

        let c = vec_from_na(&state.c);
        let (u, v, b) = (from_na(&state.u), from_na(&state.v), from_na(&state.b_inv));
        let jac = from_na(&state.jac);
        let off = fx.gres(&u, &v, &fx.basis[0]);
        check("initial offset", rel_v(&state.offset, &off), TOL);

        // (1)
        let jc_b: Vec<f64> = matvec(&jac, &c).iter().zip(&off).map(|(x, y)| x + y).collect();
        let c_bar: Vec<f64> = c.iter().zip(matvec(&b, &jc_b)).map(|(x, y)| x - y).collect();
        // (2)
        let a_bar = fx.a_of(&c_bar);
        let w = mul(&tr(&u), &mul(&a_bar, &v));
        let (x_bar, y_bar) = fx.corrections(&u, &v, &w);
        let pair = correction_matrices(&state.u, &state.v, &to_na(&w), inst.sigma_star()).unwrap();
        check("X̄", rel_m(&pair.left, &x_bar), TOL);
        check("Ȳ", rel_m(&pair.right, &y_bar), TOL);
        // (3)
        let u_bar = lin(&u, -1.0, &mul(&u, &x_bar));
        let v_bar = lin(&v, -1.0, &mul(&v, &y_bar));
        check("Ū", rel_m(&multiplicative_refine(&state.u, &to_na(&x_bar)), &u_bar), TOL);
        check("V̄", rel_m(&multiplicative_refine(&state.v, &to_na(&y_bar)), &v_bar), TOL);
        // (4)
        let rho = fx.gres(&u_bar, &v_bar, &a_bar);
        let rho_lib =
            generalized_residual_vector(&to_na(&u_bar), &to_na(&v_bar), &to_na(&a_bar), inst.sigma_star()).unwrap();
        check("ρ", rel_v(&rho_lib, &rho), TOL);
        // (5)
        let c_next: Vec<f64> = c_bar.iter().zip(matvec(&b, &rho)).map(|(x, y)| x - y).collect();
        // (6)
        let a_next = fx.a_of(&c_next);
        let w_bar = mul(&tr(&u_bar), &mul(&a_next, &v_bar));
        let (e_bar, f_bar) = fx.corrections(&u_bar, &v_bar, &w_bar);
        // (7)
        let u_next = lin(&u_bar, -1.0, &mul(&u_bar, &e_bar));
        let v_next = lin(&v_bar, -1.0, &mul(&v_bar, &f_bar));
        // (8)
        let jac_next = fx.jac(&u_next, &v_next);
        let off_next = fx.gres(&u_next, &v_next, &fx.basis[0]);
        check(
            "J'",
            rel_m(&approx_jacobian(&to_na(&u_next), &to_na(&v_next), &inst).unwrap(), &jac_next),
            TOL,
        );
        // (9)
        let b_next = chebyshev(&b, &jac_next);
        check("B' (primitive)", rel_m(&chebyshev_update(&state.b_inv, &to_na(&jac_next)), &b_next), TOL);
        let d_next = fx.dist(&u_next, &a_next, &v_next);

        let (next, rec) = outer_step(&state, &inst).unwrap();
        check("c'", rel_v(&next.c, &c_next), TOL);
        check("U'", rel_m(&next.u, &u_next), TOL);
        check("V'", rel_m(&next.v, &v_next), TOL);
        check("J' (step)", rel_m(&next.jac, &jac_next), TOL);
        check("b'", rel_v(&next.offset, &off_next), TOL);
        check("B'", rel_m(&next.b_inv, &b_next), TOL);
        // d is a small difference of O(1) quantities, so it is compared
        // against the scale of Σ* rather than its own size.
        let scale: f64 = fx.sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
        check("d'", (rec.d_k - d_next).abs() / scale, TOL);
        let d_lib = residual_d(&next.u, &next.v, &to_na(&a_next), inst.sigma_star()).unwrap();
        check("d' (kernel)", (d_lib - d_next).abs() / scale, TOL);
    }
}

#[test]
fn alg1_step_matches_straight_line_oracle() {
    const TOL: f64 = 1e-13;
    for seed in [3u64, 11, 29] {
        let (inst, c0) = tiny(seed, 5e-2);
        let fx = Fixture::new(&inst);
        let (state, _) = alg1_initial_state(&inst, &c0).unwrap();
        let sig = &fx.sigma;

        let c = vec_from_na(&state.c);
        let (u, v, b) = (from_na(&state.u), from_na(&state.v), from_na(&state.b_inv));
        let jac = from_na(&state.jac);
        let off = fx.uncorrected_offset(&u, &v);
        check("b0", rel_v(&state.offset, &off), TOL);
        check("B0 J0 = I", rel_m(&(&state.b_inv * &state.jac), &eye(2)), TOL);
        let s = vec_from_na(&state.shift);

        // (1) y = c − B(Jc + b − σ*)
        let inner: Vec<f64> = matvec(&jac, &c).iter().zip(&off).zip(sig).map(|((x, y), z)| x + y - z).collect();
        let y: Vec<f64> = c.iter().zip(matvec(&b, &inner)).map(|(p, q)| p - q).collect();
        // (2)-(5)
        let a_y = fx.a_of(&y);
        let d = mul(&tr(&u), &mul(&a_y, &v));
        let (xs, ys) = fx.skew(&d, &s);
        let (xl, yl) = alg1_skew_pair(&to_na(&d), &state.shift, inst.min_gap()).unwrap();
        check("X", rel_m(&xl, &xs), TOL);
        check("Y", rel_m(&yl, &ys), TOL);
        let z = fx.cayley(&u, &xs);
        let nn = fx.cayley(&v, &ys);
        check("Z", rel_m(&cayley_orthogonalize(&state.u, &to_na(&xs)).unwrap(), &z), TOL);
        check("N", rel_m(&cayley_orthogonalize(&state.v, &to_na(&ys)).unwrap(), &nn), TOL);
        // (6)-(7)
        let p = mul(&tr(&z), &mul(&a_y, &nn));
        let excess: Vec<f64> = (0..fx.n).map(|i| p[i][i] - sig[i]).collect();
        let c_next: Vec<f64> = y.iter().zip(matvec(&b, &excess)).map(|(p, q)| p - q).collect();
        // (8)
        let jb = mul(&jac, &b);
        let s_bar: Vec<f64> = sig
            .iter()
            .zip(matvec(&lin(&eye(fx.n), -1.0, &jb), &excess))
            .map(|(p, q)| p + q)
            .collect();
        // (9)-(12)
        let a_next = fx.a_of(&c_next);
        let d_bar = lin(&lin(&mul(&tr(&u), &mul(&a_next, &v)), -1.0, &d), 1.0, &p);
        let (xb, yb) = fx.skew(&d_bar, &s_bar);
        let u_next = fx.cayley(&z, &xb);
        let v_next = fx.cayley(&nn, &yb);
        // (13)-(16)
        let proj = mul(&tr(&u_next), &mul(&a_next, &v_next));
        let jac_next = fx.jac(&u_next, &v_next);
        let off_next = fx.uncorrected_offset(&u_next, &v_next);
        let b_next = chebyshev(&b, &jac_next);
        let jb_next = mul(&jac_next, &b_next);
        let t: Vec<f64> = (0..fx.n).map(|i| proj[i][i] - sig[i]).collect();
        let s_next: Vec<f64> = sig
            .iter()
            .zip(matvec(&lin(&eye(fx.n), -1.0, &jb_next), &t))
            .map(|(p, q)| p + q)
            .collect();
        let d_next = fx.dist(&u_next, &a_next, &v_next);

        let (next, rec) = alg1_outer_step(&state, &inst).unwrap();
        check("c'", rel_v(&next.c, &c_next), TOL);
        check("U'", rel_m(&next.u, &u_next), TOL);
        check("V'", rel_m(&next.v, &v_next), TOL);
        check("J'", rel_m(&next.jac, &jac_next), TOL);
        check("b'", rel_v(&next.offset, &off_next), TOL);
        check("B'", rel_m(&next.b_inv, &b_next), TOL);
        check("s'", rel_v(&next.shift, &s_next), TOL);
        let scale: f64 = sig.iter().map(|s| s * s).sum::<f64>().sqrt();
        check("d'", (rec.d_k - d_next).abs() / scale, TOL);
    }
}
