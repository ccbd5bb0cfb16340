//! Independent reference computations used only by tests.

use nalgebra::DMatrix;
use num_complex::Complex64;

type C = Complex64;

/// `exp(alpha a^dag - alpha^* a)` on a Fock space truncated at `cutoff`,
/// via the matrix exponential. Accurate for low rows when `cutoff` is large.
pub fn displacement_by_expm(alpha: C, cutoff: usize) -> DMatrix<C> {
    let l = cutoff + 1;
    let mut gen = DMatrix::<C>::zeros(l, l);
    for n in 1..l {
        let s = (n as f64).sqrt();
        gen[(n, n - 1)] += alpha * s;
        gen[(n - 1, n)] -= alpha.conj() * s;
    }
    gen.exp()
}

/// Photon amplitudes driven by a trion held at fixed amplitudes
/// `psi_up e^{-i omega_0 t}`, `psi_dn e^{-i omega_0 t}`, integrated with
/// fixed-step RK4 until the transient has died out. Returned in the frame
/// rotating at `omega_0`.
pub fn emission_by_integration(
    params: &crate::SystemParams,
    psi_up: C,
    psi_dn: C,
    t_end: f64,
) -> crate::emission::EmissionAmplitudes {
    let (wc, k, d, g, w0) = (params.omega_c, params.kappa, params.delta, params.g, params.omega_0);
    let i = C::new(0.0, 1.0);
    // y = [up+, up-, down+, down-]
    let rhs = |t: f64, y: &[C; 4]| -> [C; 4] {
        let drive = C::from_polar(g, -w0 * t);
        let e = C::new(wc, -k);
        [
            -i * (e * y[0] + d * y[1] + drive * psi_up),
            -i * (e * y[1] + d * y[0]),
            -i * (e * y[2] + d * y[3]),
            -i * (e * y[3] + d * y[2] + drive * psi_dn),
        ]
    };
    let h = 1e-3;
    let steps = (t_end / h).ceil() as usize;
    let mut y = [C::new(0.0, 0.0); 4];
    let add = |y: &[C; 4], k: &[C; 4], s: f64| -> [C; 4] { std::array::from_fn(|j| y[j] + k[j] * s) };
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + h / 2.0, &add(&y, &k1, h / 2.0));
        let k3 = rhs(t + h / 2.0, &add(&y, &k2, h / 2.0));
        let k4 = rhs(t + h, &add(&y, &k3, h));
        y = std::array::from_fn(|j| y[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0));
    }
    let phase = C::from_polar(1.0, w0 * steps as f64 * h);
    crate::emission::EmissionAmplitudes {
        up_plus: y[0] * phase,
        up_minus: y[1] * phase,
        down_plus: y[2] * phase,
        down_minus: y[3] * phase,
    }
}

/// Exhaustive search for the orthonormal pair `(u, v)` maximizing
/// `min(|<u|a>|^2, |<v|b>|^2)`, with `u = (cos s/2, e^{i f} sin s/2)` and
/// `v` its orthogonal complement on a `points x points` grid in `(s, f)`.
pub fn closest_orthogonal_pair(a: &[C; 2], b: &[C; 2], points: usize) -> ([C; 2], [C; 2]) {
    let ov = |x: &[C; 2], y: &[C; 2]| (x[0].conj() * y[0] + x[1].conj() * y[1]).norm_sqr();
    let mut best = (f64::NEG_INFINITY, [C::new(0.0, 0.0); 2], [C::new(0.0, 0.0); 2]);
    for i in 0..points {
        let s = std::f64::consts::PI * i as f64 / (points - 1) as f64;
        for j in 0..points {
            let f = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
            let (sn, cs) = (0.5 * s).sin_cos();
            let u = [C::new(cs, 0.0), C::from_polar(sn, f)];
            let v = [C::from_polar(-sn, -f), C::new(cs, 0.0)];
            let score = ov(&u, a).min(ov(&v, b));
            if score > best.0 {
                best = (score, u, v);
            }
        }
    }
    (best.1, best.2)
}

/// Transmission amplitudes from the steady linear-response equations for
/// `(c_+, c_-, p)` under weak monochromatic driving, solved by LU.
/// Entry `[a][b]` is output `b` for unit input `a` (index 0 = sigma+).
pub fn transmission_by_linear_solve(params: &crate::SystemParams, omega: f64) -> [[C; 2]; 2] {
    use nalgebra::{Matrix3, Vector3};
    let i = C::new(0.0, 1.0);
    let k = params.kappa;
    let diag = C::new(k, 0.0) - i * (omega - params.omega_c);
    let m = Matrix3::new(
        diag, i * params.delta, i * params.g,
        i * params.delta, diag, C::new(0.0, 0.0),
        i * params.g, C::new(0.0, 0.0), i * (params.omega_0 - omega),
    );
    let lu = m.lu();
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        let mut rhs = Vector3::zeros();
        rhs[a] = C::new(k.sqrt(), 0.0);
        let x = lu.solve(&rhs).expect("non-singular linear response");
        row[0] = x[0] * k.sqrt();
        row[1] = x[1] * k.sqrt();
    }
    out
}
