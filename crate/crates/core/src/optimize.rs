//! Derivative-free maximization on the unit cube.
//!
//! Nelder-Mead with every trial point projected onto `[0, 1]^d`, followed by
//! a compass search that also probes the faces. Both stages only ever
//! accept improvements, so the returned value is never below the start.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub initial_step: f64,
    /// Stop once every vertex is within this sup-distance of the best one.
    pub diameter_tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.2,
            diameter_tol: 1e-9,
            max_iter: 2000,
        }
    }
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// `a + t (b - a)`, projected.
fn along(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
    project(&mut out);
    out
}

impl NelderMead {
    pub fn maximize<F: FnMut(&[f64]) -> f64>(&self, f: &mut F, start: &[f64]) -> (Vec<f64>, f64) {
        let dim = start.len();
        if dim == 0 {
            return (Vec::new(), f(start));
        }
        let mut base = start.to_vec();
        project(&mut base);
        let mut vertices = vec![base.clone()];
        for i in 0..dim {
            let mut v = base.clone();
            v[i] += if v[i] + self.initial_step <= 1.0 {
                self.initial_step
            } else {
                -self.initial_step
            };
            project(&mut v);
            vertices.push(v);
        }
        let mut values: Vec<f64> = vertices.iter().map(|v| f(v)).collect();
        let mut order: Vec<usize> = (0..=dim).collect();

        for _ in 0..self.max_iter {
            // best first; stable so ties keep vertex order
            order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
            let (best, worst, second_worst) = (order[0], order[dim], order[dim - 1]);

            let diameter = vertices
                .iter()
                .map(|v| {
                    v.iter()
                        .zip(&vertices[best])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < self.diameter_tol {
                break;
            }

            let mut centroid = vec![0.0; dim];
            for &j in &order[..dim] {
                for (c, x) in centroid.iter_mut().zip(&vertices[j]) {
                    *c += x;
                }
            }
            for c in centroid.iter_mut() {
                *c /= dim as f64;
            }

            let reflected = along(&centroid, &vertices[worst], -self.reflection);
            let fr = f(&reflected);

            if fr > values[best] {
                let expanded = along(&centroid, &reflected, self.expansion);
                let fe = f(&expanded);
                if fe > fr {
                    vertices[worst] = expanded;
                    values[worst] = fe;
                } else {
                    vertices[worst] = reflected;
                    values[worst] = fr;
                }
                continue;
            }
            if fr > values[second_worst] {
                vertices[worst] = reflected;
                values[worst] = fr;
                continue;
            }

            let (contracted, threshold) = if fr > values[worst] {
                (along(&centroid, &reflected, self.contraction), fr)
            } else {
                (along(&centroid, &vertices[worst], self.contraction), values[worst])
            };
            let fc = f(&contracted);
            if fc > threshold {
                vertices[worst] = contracted;
                values[worst] = fc;
                continue;
            }

            let anchor = vertices[best].clone();
            for j in 0..=dim {
                if j != best {
                    vertices[j] = along(&anchor, &vertices[j], self.shrink);
                    values[j] = f(&vertices[j]);
                }
            }
        }

        let best = (0..=dim)
            .max_by(|&a, &b| values[a].total_cmp(&values[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        (vertices.swap_remove(best), values[best])
    }
}

/// Coordinate-wise pattern search on the cube, halving the step whenever a
/// full sweep finds no strict improvement.
pub fn compass_search<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    mut x: Vec<f64>,
    mut value: f64,
    initial_step: f64,
    min_step: f64,
) -> (Vec<f64>, f64) {
    let mut step = initial_step;
    while step >= min_step {
        let mut improved = false;
        for i in 0..x.len() {
            let current = x[i];
            for candidate in [current + step, current - step] {
                let c = candidate.clamp(0.0, 1.0);
                if c == x[i] {
                    continue;
                }
                x[i] = c;
                let v = f(&x);
                if v > value {
                    value = v;
                    improved = true;
                    break;
                }
                x[i] = current;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, value)
}
