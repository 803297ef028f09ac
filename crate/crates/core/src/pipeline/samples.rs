use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{self, ArtifactError};
use crate::geometry::{SdfSampleSet, Vec3};

pub const SAMPLES_FORMAT: &str = "shapeopt-samples";
pub const SAMPLES_VERSION: &str = "1";

/// On-disk form of one shape's training pairs; `points` is flat `x y z`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleArchive {
    format: String,
    version: String,
    shape_id: String,
    points: Vec<f64>,
    distances: Vec<f64>,
}

pub fn save_samples(set: &SdfSampleSet, path: &Path) -> Result<(), ArtifactError> {
    let archive = SampleArchive {
        format: SAMPLES_FORMAT.into(),
        version: SAMPLES_VERSION.into(),
        shape_id: set.shape_id.clone(),
        points: set.points.iter().flat_map(|p| [p.x, p.y, p.z]).collect(),
        distances: set.distances.clone(),
    };
    artifact::write_json(path, &archive)
}

pub fn load_samples(path: &Path) -> Result<SdfSampleSet, ArtifactError> {
    let a: SampleArchive = artifact::read_versioned(path, SAMPLES_FORMAT, SAMPLES_VERSION)?;
    let bad = |message: String| ArtifactError::Format {
        path: path.to_path_buf(),
        expected: SAMPLES_FORMAT.into(),
        message,
    };
    if a.points.len() % 3 != 0 {
        return Err(bad(format!("{} point coordinates is not a multiple of 3", a.points.len())));
    }
    let points = a.points.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    SdfSampleSet::new(a.shape_id, points, a.distances).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_sdf, shapes, SdfSampling};

    #[test]
    fn archive_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let mesh = shapes::icosphere(0.7, 2);
        let set = sample_sdf(&mesh, "ball", 500, &SdfSampling::default(), 1).unwrap();
        save_samples(&set, &path).unwrap();
        assert_eq!(load_samples(&path).unwrap(), set);
    }

    #[test]
    fn ragged_points_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(
            &path,
            r#"{"format":"shapeopt-samples","version":"1","shape_id":"a","points":[0,0],"distances":[0]}"#,
        )
        .unwrap();
        assert!(matches!(load_samples(&path), Err(ArtifactError::Format { .. })));
        std::fs::write(
            &path,
            r#"{"format":"shapeopt-samples","version":"0","shape_id":"a","points":[],"distances":[]}"#,
        )
        .unwrap();
        assert!(matches!(load_samples(&path), Err(ArtifactError::Version { .. })));
    }
}
