//! Leapfrog integration of Hamiltonian dynamics.

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Runs `steps` leapfrog updates in place with a diagonal inverse mass
/// matrix: half kick, `steps` drifts with full kicks between, half kick.
///
/// Returns `false` (a flagged divergence) if a non-finite gradient or state
/// is encountered; the buffers then hold the partial trajectory and must be
/// discarded by the caller.
pub fn leapfrog_with_mass<G>(
    position: &mut [f64],
    momentum: &mut [f64],
    step_size: f64,
    steps: usize,
    inv_mass: &[f64],
    mut gradient: G,
) -> bool
where
    G: FnMut(&[f64], &mut [f64]),
{
    if steps == 0 {
        return true;
    }
    let dim = position.len();
    let mut grad = vec![0.0; dim];
    gradient(position, &mut grad);
    if !all_finite(&grad) {
        return false;
    }
    for d in 0..dim {
        momentum[d] += 0.5 * step_size * grad[d];
    }
    for step in 0..steps {
        for d in 0..dim {
            position[d] += step_size * inv_mass[d] * momentum[d];
        }
        gradient(position, &mut grad);
        if !all_finite(&grad) || !all_finite(position) {
            return false;
        }
        let kick = if step + 1 == steps { 0.5 } else { 1.0 };
        for d in 0..dim {
            momentum[d] += kick * step_size * grad[d];
        }
    }
    all_finite(momentum)
}

/// Unit-mass leapfrog over a gradient callable.
pub fn leapfrog<G>(
    position: &mut [f64],
    momentum: &mut [f64],
    step_size: f64,
    steps: usize,
    gradient: G,
) -> bool
where
    G: FnMut(&[f64], &mut [f64]),
{
    let inv_mass = vec![1.0; position.len()];
    leapfrog_with_mass(position, momentum, step_size, steps, &inv_mass, gradient)
}
