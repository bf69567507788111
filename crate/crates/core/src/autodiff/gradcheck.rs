use super::{AutodiffError, DiffTensor, Tape, Tensor};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of comparing tape gradients against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)`.
    pub max_rel_error: f64,
    pub coordinates: usize,
}

/// Compares analytic and central-difference gradients (step `h`) of a scalar
/// function of `params` on a random subset of coordinates: `fraction` of each
/// tensor, but at least `min_per_tensor` (capped at the tensor size).
///
/// `f` receives a fresh tape and the recorded parameters and returns the
/// scalar output.
pub fn check_gradients<F>(
    params: &[Tensor],
    f: F,
    h: f64,
    fraction: f64,
    min_per_tensor: usize,
    seed: u64,
) -> Result<GradCheck, AutodiffError>
where
    F: Fn(&mut Tape, &[DiffTensor]) -> Result<DiffTensor, AutodiffError>,
{
    let eval = |ps: &[Tensor]| -> Result<f64, AutodiffError> {
        let mut tape = Tape::new();
        let ids = ps
            .iter()
            .map(|p| tape.param(p.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let out = f(&mut tape, &ids)?;
        Ok(tape.value(out).item())
    };

    let mut tape = Tape::new();
    let ids = params
        .iter()
        .map(|p| tape.param(p.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let out = f(&mut tape, &ids)?;
    let grads = tape.backward(out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    let mut coordinates = 0;
    for (i, p) in params.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let want = ((fraction * p.len() as f64).ceil() as usize).max(min_per_tensor).min(p.len());
        for j in sample(&mut rng, p.len(), want) {
            let analytic = grads.get(ids[i]).map_or(0.0, |g| g.data()[j]);
            let x0 = p.data()[j];
            work[i].data_mut()[j] = x0 + h;
            let plus = eval(&work)?;
            work[i].data_mut()[j] = x0 - h;
            let minus = eval(&work)?;
            work[i].data_mut()[j] = x0;
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            coordinates += 1;
        }
    }
    Ok(GradCheck {
        max_rel_error: worst,
        coordinates,
    })
}
