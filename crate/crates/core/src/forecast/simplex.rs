//! Nelder-Mead downhill simplex.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evaluations: usize,
    /// Stop once the simplex's objective spread falls below this fraction
    /// of the best value.
    pub relative_tolerance: f64,
    /// Absolute floor for the spread test, used when the optimum is near zero.
    pub absolute_tolerance: f64,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl SimplexOptions {
    /// 500 evaluations per dimension plus one, relative tolerance 1e-8.
    pub fn for_dimension(dim: usize) -> Self {
        Self {
            max_evaluations: 500 * (dim + 1),
            relative_tolerance: 1e-8,
            absolute_tolerance: 1e-300,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` starting from `start`. Non-finite objective values are
/// treated as +inf so the simplex walks away from them.
pub fn minimize<F>(mut f: F, start: &[f64], opts: &SimplexOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    if dim == 0 {
        let value = eval(start, &mut evaluations);
        return Minimum {
            point: Vec::new(),
            value,
            evaluations,
            converged: true,
        };
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += if start[i].abs() > 1.0 {
            opts.initial_step * start[i].abs()
        } else {
            opts.initial_step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evaluations)).collect();

    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[dim];
        let spread = worst - best;
        if spread.is_finite()
            && spread <= opts.relative_tolerance * best.abs() + opts.absolute_tolerance
        {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evaluations {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let fr = eval(&reflected, &mut evaluations);
        if fr < values[0] {
            let expanded = along(EXPAND);
            let fe = eval(&expanded, &mut evaluations);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let c = along(CONTRACT);
            let fc = eval(&c, &mut evaluations);
            (c, fc)
        } else {
            let c = along(-CONTRACT);
            let fc = eval(&c, &mut evaluations);
            (c, fc)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + SHRINK * (x - b))
                .collect();
            values[i] = eval(&shrunk, &mut evaluations);
            simplex[i] = shrunk;
        }
    }

    Minimum {
        point: simplex.swap_remove(0),
        value: values[0],
        evaluations,
        converged,
    }
}
