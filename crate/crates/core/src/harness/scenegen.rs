//! Per-trial scene construction.

use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{ClutterKind, ExperimentConfig};
use crate::error::{Error, Result};
use crate::scene::{target_beam, ArrayConfig, BeamGrid, Scene, Target, TargetKind, WaveformConfig};
use crate::seed::{Domain, SeedTree};

fn clutter_kind(kind: ClutterKind) -> TargetKind {
    match kind {
        ClutterKind::Scs1 => TargetKind::StaticDirect,
        ClutterKind::Scs2 => TargetKind::StaticMultipath,
    }
}

const SCS2_STREAM: u64 = 1 << 32;

/// Builds the scene of one trial.
///
/// Explicit targets are used verbatim. Otherwise each scatterer lands on a
/// distinct random beam other than the user's, with its azimuth jittered
/// inside that beam and its range drawn uniformly from the configured
/// interval. Each scatterer has its own substream, and the two kinds draw
/// beams from opposite ends of one shuffled list, so changing one kind's
/// count leaves the other kind's scatterers where they were.
pub fn build_scene(
    config: &ExperimentConfig,
    waveform: &WaveformConfig,
    arrays: &ArrayConfig,
    grid: &BeamGrid,
    seeds: &SeedTree,
) -> Result<Scene> {
    let s = &config.scene;
    let mut user = Target::mobile_user(s.user_position, s.user_velocity);
    user.reflectivity = s.user_reflectivity;
    let mut targets = vec![user.clone()];

    if !s.targets.is_empty() {
        targets.extend(s.targets.iter().map(|t| {
            let mut c = Target::clutter(clutter_kind(t.kind), t.position);
            c.reflectivity = t.reflectivity;
            c
        }));
    } else {
        let user_beam = target_beam(&user, grid)?;
        let mut free: Vec<usize> = (0..grid.count()).filter(|&b| b != user_beam).collect();
        if s.num_scs1 + s.num_scs2 > free.len() {
            return Err(Error::config(format!(
                "{} scatterers do not fit in the {} beams left beside the user",
                s.num_scs1 + s.num_scs2,
                free.len()
            )));
        }
        free.shuffle(&mut seeds.rng(Domain::Scene, 0));
        // SCS1 fill the shuffled beams from the front, SCS2 from the back
        let scs1 = (0..s.num_scs1).map(|i| (TargetKind::StaticDirect, free[i], 1 + i as u64));
        let scs2 = (0..s.num_scs2).map(|j| (TargetKind::StaticMultipath, free[free.len() - 1 - j], SCS2_STREAM + j as u64));
        for (kind, beam, stream) in scs1.chain(scs2) {
            let mut rng = seeds.rng(Domain::Scene, stream);
            let res = grid.resolution();
            let jitter = rng.random_range(-1.0..=1.0) * s.azimuth_jitter * res;
            let az = (grid.angle(beam) + jitter).clamp(grid.min(), grid.max());
            let range = if s.scs_range_m[0] < s.scs_range_m[1] {
                rng.random_range(s.scs_range_m[0]..s.scs_range_m[1])
            } else {
                s.scs_range_m[0]
            };
            let mut c = Target::clutter(kind, [range * az.cos(), range * az.sin(), 0.0]);
            c.reflectivity = s.scs_reflectivity;
            targets.push(c);
        }
    }
    Scene::build(
        targets,
        grid.clone(),
        waveform,
        arrays,
        config.radar_snr_db,
        config.comm_snr_db,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parts(c: &ExperimentConfig) -> (WaveformConfig, ArrayConfig, BeamGrid) {
        let wf = c.waveform_config().unwrap();
        let arrays = c.array_config(&wf).unwrap();
        (wf, arrays, c.beam_grid().unwrap())
    }

    #[test]
    fn baseline_scene_layout() {
        let c = ExperimentConfig::default();
        let (wf, arrays, grid) = parts(&c);
        let scene = build_scene(&c, &wf, &arrays, &grid, &SeedTree::for_trial(1, 0)).unwrap();
        assert_eq!(scene.targets.len(), 3);
        assert_eq!(scene.user_beam(), 25);
        let kinds: Vec<_> = scene.targets.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![TargetKind::MobileUser, TargetKind::StaticDirect, TargetKind::StaticMultipath]
        );
    }

    #[test]
    fn same_seed_same_scene() {
        let c = ExperimentConfig::default();
        let (wf, arrays, grid) = parts(&c);
        let seeds = SeedTree::for_trial(9, 4);
        let a = build_scene(&c, &wf, &arrays, &grid, &seeds).unwrap();
        let b = build_scene(&c, &wf, &arrays, &grid, &seeds).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scene_geometry_ignores_radar_snr() {
        let c = ExperimentConfig::default();
        let (wf, arrays, grid) = parts(&c);
        let seeds = SeedTree::for_trial(2, 1);
        let a = build_scene(&c, &wf, &arrays, &grid, &seeds).unwrap();
        let quiet = ExperimentConfig { radar_snr_db: -10.0, ..c };
        let b = build_scene(&quiet, &wf, &arrays, &grid, &seeds).unwrap();
        assert_eq!(a.targets, b.targets);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn random_scenes_are_valid(seed in any::<u32>(), n1 in 0usize..8, n2 in 0usize..8, res in prop::sample::select(vec![2.0, 4.0, 8.0])) {
            let mut c = ExperimentConfig::default();
            c.scene.num_scs1 = n1;
            c.scene.num_scs2 = n2;
            c.grid.resolution_deg = res;
            let (wf, arrays, grid) = parts(&c);
            let scene = build_scene(&c, &wf, &arrays, &grid, &SeedTree::new(seed as u64)).unwrap();
            prop_assert_eq!(scene.targets.len(), 1 + n1 + n2);
            let mut beams = scene.target_beams().to_vec();
            beams.sort_unstable();
            beams.dedup();
            prop_assert_eq!(beams.len(), 1 + n1 + n2);
        }
    }
}
