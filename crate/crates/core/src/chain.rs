use crate::model::{GridModel, LabelField};
use crate::reference::{RunConfig, SampleTrace};
use crate::rng::ReferenceRng;

/// Per-variable conditional sampler plugged into the shared raster-scan loop.
pub(crate) trait SiteKernel {
    /// Called once at the start of every outer iteration.
    fn set_temperature(&mut self, temperature: f64);

    /// Draws a label given the energies of all labels for one variable.
    fn draw(&mut self, energies: &[f64]) -> usize;
}

/// Runs `config.iterations` raster sweeps. The initial state is drawn
/// uniformly from the seed's reference RNG, which is then handed to the
/// kernel so that kernels sharing a random source consume it identically.
pub(crate) fn run_chain<K, F>(
    model: &GridModel,
    config: &RunConfig,
    make_kernel: F,
) -> (LabelField, SampleTrace)
where
    K: SiteKernel,
    F: FnOnce(ReferenceRng) -> K,
{
    let vars = model.variables();
    let labels = model.labels();
    let mut rng = ReferenceRng::new(config.seed);
    let init = (0..vars).map(|_| rng.below(labels) as u16).collect();
    let mut state =
        LabelField::new(model.width(), model.height(), init).expect("dimensions from model");
    let mut kernel = make_kernel(rng);

    let keep = config.collect_last;
    let first_kept = config.iterations - keep;
    let mut samples = vec![0u16; vars * keep];
    let mut energies = vec![0.0; labels];

    for k in 0..config.iterations {
        kernel.set_temperature(config.temperature_at(k));
        let s = state.as_mut_slice();
        for v in 0..vars {
            model.label_energies(s, v, &mut energies);
            s[v] = kernel.draw(&energies) as u16;
        }
        if k >= first_kept {
            let t = k - first_kept;
            for (v, &l) in s.iter().enumerate() {
                samples[v * keep + t] = l;
            }
        }
    }

    let trace = SampleTrace::from_parts(model.width(), model.height(), labels, keep, samples)
        .expect("trace shape from model");
    (state, trace)
}
