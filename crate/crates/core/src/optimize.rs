//! Derivative-free Nelder-Mead simplex minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Converged when both the simplex diameter and the spread of function
    /// values fall below this.
    pub tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from a simplex spanned by `x0` and `x0 + step_i e_i`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(step.len(), n, "one initial step per coordinate");
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread = (vals[n] - vals[0]).abs();
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.tol && diameter <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };

        let xr = along(-alpha);
        let fr = eval(&xr, &mut evals);
        if fr < vals[0] {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        // Outside contraction when the reflection improved on the worst point,
        // inside contraction otherwise.
        let xc = if fr < vals[n] { along(-alpha * rho) } else { along(rho) };
        let fc = eval(&xc, &mut evals);
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = (0..n).map(|j| pts[0][j] + sigma * (pts[i][j] - pts[0][j])).collect();
            vals[i] = eval(&shrunk, &mut evals);
            pts[i] = shrunk;
        }
    }
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    Minimum { x: pts[best].clone(), value: vals[best], iterations, evaluations: evals, converged }
}
