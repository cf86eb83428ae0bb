//! Spherical k-means and von Mises–Fisher mixture clustering of unit-norm
//! frame embeddings.

mod kmeans;
mod mixture;

pub use kmeans::{kmeans_pp_indices, kmeans_pp_init, mean_direction, spherical_kmeans, spherical_kmeans_restarts, KMeansResult};
pub use mixture::{
    activity_iou, e_step, fit_vmfmm, fit_vmfmm_from, fuse_components, m_step, MStepOutcome, MixtureConfig,
    MixtureFit, MixtureInit, PosteriorMatrix, VmfMixtureParams, DEAD_COMPONENT_MASS,
    RESEED_KAPPA,
};
pub(crate) use mixture::argmax;
