//! Scene files, synthetic corpora and error-field grids.

mod error_field;
mod scene_file;
mod synth;

pub use error_field::{compute_error_field, ErrorCell, ErrorFieldError, ErrorFieldGrid};
pub use scene_file::{
    parse_scene_file, read_scene_file, write_scene_file, SceneFile, SceneFileError, FORMAT_VERSION,
};
pub use synth::{
    default_families, synthesize_corpus, FamilyKind, FamilySpec, DEFAULT_SPEED, LATERAL_SIGMA,
    MAX_ACCELERATION, SAMPLE_SPACING,
};
