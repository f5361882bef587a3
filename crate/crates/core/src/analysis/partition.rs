use crate::dynamics::{MeanEstimate, TrajectoryEnsemble};
use crate::error::{Error, Result};

/// Split of the trajectory-estimated transfer probability `p = ⟨P_a⟩` into
/// trajectories without (`p_c`) and with (`p_i_component`) spontaneous
/// emission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionResult {
    pub p_c: f64,
    pub p_i_component: f64,
    pub p_c_err: f64,
    pub p_i_err: f64,
    pub n_traj: usize,
}

impl PartitionResult {
    pub fn total(&self) -> f64 {
        self.p_c + self.p_i_component
    }
}

/// Each trajectory contributes its final `P_a` to `p_c` if it has no
/// `spont_a`/`spont_b` jump and to `p_i_component` otherwise. Cavity jumps do
/// not count against coherence.
pub fn partition_coherent(ensemble: &TrajectoryEnsemble) -> Result<PartitionResult> {
    let r = &ensemble.records;
    if r.is_empty() {
        return Err(Error::invalid("empty ensemble"));
    }
    let coherent = |x: &crate::dynamics::TrajectoryRecord| x.spontaneous_jumps() == 0;
    let c = MeanEstimate::from_samples(r.iter().map(|x| if coherent(x) { x.final_populations.a } else { 0.0 }));
    let i = MeanEstimate::from_samples(r.iter().map(|x| if coherent(x) { 0.0 } else { x.final_populations.a }));
    Ok(PartitionResult { p_c: c.mean, p_i_component: i.mean, p_c_err: c.std_err, p_i_err: i.std_err, n_traj: r.len() })
}
