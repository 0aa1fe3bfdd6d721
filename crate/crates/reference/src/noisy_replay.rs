use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use slambench_core::api::{
    ConfigApi, FrameView, OutputKind, OutputValue, ParameterSpec, SlamAlgorithm, TrackingStatus, POSE_CHANNEL,
};
use slambench_core::datafile::payload::decode_pose;
use slambench_core::datafile::SensorType;
use slambench_core::geometry::{Pose, Timestamp, Vec3};

/// Ground truth with seeded perturbations.
///
/// Each estimate is `B_k * N_k`: a drifting base `B` composed with local
/// noise `N`. The base follows the ground-truth increments plus a forward
/// step of `drift` metres along local x per frame, so relative motion
/// between consecutive bases is off by exactly that step. `N` has Gaussian
/// translation per axis and a rotation about a uniform random axis with a
/// Gaussian angle. The first estimate carries neither.
pub struct NoisyReplay {
    gt_sensor: Option<u32>,
    rng: ChaCha8Rng,
    drift: f64,
    latest_gt: Option<(Timestamp, Pose)>,
    previous_gt: Option<Pose>,
    base: Pose,
    estimate: Option<(Timestamp, Pose)>,
    frames: u64,
    log_path: String,
    log: Vec<NoiseSample>,
    status: TrackingStatus,
}

struct NoiseSample {
    timestamp: Timestamp,
    translation: Vec3,
    rotation: Vec3,
}

impl Default for NoisyReplay {
    fn default() -> Self {
        Self {
            gt_sensor: None,
            rng: ChaCha8Rng::seed_from_u64(0),
            drift: 0.0,
            latest_gt: None,
            previous_gt: None,
            base: Pose::identity(),
            estimate: None,
            frames: 0,
            log_path: String::new(),
            log: Vec::new(),
            status: TrackingStatus::Bootstrap,
        }
    }
}

impl NoisyReplay {
    fn sample_noise(&mut self, sigma_trans: f64, sigma_rot: f64) -> (Vec3, Vec3) {
        let normal3 = |rng: &mut ChaCha8Rng| {
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            let z: f64 = StandardNormal.sample(rng);
            Vec3::new(x, y, z)
        };
        let translation = normal3(&mut self.rng) * sigma_trans;
        let axis = normal3(&mut self.rng);
        let angle: f64 = StandardNormal.sample(&mut self.rng);
        let rotation = if axis.norm() > 0.0 {
            axis.normalize() * (angle * sigma_rot)
        } else {
            Vec3::zeros()
        };
        (translation, rotation)
    }

    fn write_log(&self) -> std::io::Result<()> {
        let mut text = String::from("index,timestamp,tx,ty,tz,rx,ry,rz\n");
        for (i, s) in self.log.iter().enumerate() {
            let (t, r) = (s.translation, s.rotation);
            let _ = writeln!(
                text,
                "{i},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.timestamp, t.x, t.y, t.z, r.x, r.y, r.z
            );
        }
        std::fs::write(&self.log_path, text)
    }
}

impl SlamAlgorithm for NoisyReplay {
    fn new_configuration(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        [
            ParameterSpec::real("st", "sigma-trans", "Translation noise standard deviation (m)", 0.0)
                .bounded(0.0, 10.0)
                .live(),
            ParameterSpec::real("sr", "sigma-rot", "Rotation noise standard deviation (rad)", 0.0).bounded(0.0, 3.2),
            ParameterSpec::real("d", "drift", "Forward drift added per frame (m)", 0.0).bounded(0.0, 10.0),
            ParameterSpec::int("s", "seed", "Noise generator seed", 0).bounded(0.0, 9.0e15),
            ParameterSpec::string("nl", "noise-log", "CSV file receiving the sampled noise at clean-up", ""),
        ]
        .into_iter()
        .all(|spec| cfg.declare_parameter(spec))
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        self.gt_sensor = crate::find_sensor(&cfg.sensors(), SensorType::GtPose);
        if self.gt_sensor.is_none() {
            log::error!("noisy-replay needs a ground-truth pose sensor");
            return false;
        }
        self.rng = ChaCha8Rng::seed_from_u64(cfg.param_int("seed").unwrap_or(0) as u64);
        self.drift = cfg.param_real("drift").unwrap_or(0.0);
        self.log_path = cfg.param_str("noise-log").unwrap_or_default();
        cfg.register_output(POSE_CHANNEL, OutputKind::Pose) && cfg.register_output("status", OutputKind::TrackingStatus)
    }

    fn update_frame(&mut self, _cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool {
        if Some(frame.sensor_index) != self.gt_sensor {
            return false;
        }
        match decode_pose(frame.payload) {
            Ok(pose) => {
                self.latest_gt = Some((frame.timestamp, pose));
                true
            }
            Err(e) => {
                log::warn!("noisy-replay: bad pose payload: {e}");
                false
            }
        }
    }

    fn process_once(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let Some((timestamp, gt)) = self.latest_gt else {
            return true;
        };
        let first = self.previous_gt.is_none();
        self.base = match self.previous_gt {
            None => gt,
            // without drift the base is the ground truth itself, bit for bit
            Some(_) if self.drift == 0.0 => gt,
            Some(prev) => self.base * (prev.inverse() * gt) * Pose::from_translation(Vec3::new(self.drift, 0.0, 0.0)),
        };
        self.previous_gt = Some(gt);
        let sigma_trans = cfg.param_real("sigma-trans").unwrap_or(0.0);
        let sigma_rot = cfg.param_real("sigma-rot").unwrap_or(0.0);
        let (translation, rotation) = if first {
            (Vec3::zeros(), Vec3::zeros())
        } else {
            self.sample_noise(sigma_trans, sigma_rot)
        };
        let angle = rotation.norm();
        let estimate = if angle > 0.0 {
            self.base * Pose::from_axis_angle(rotation / angle, angle, translation)
        } else if translation != Vec3::zeros() {
            self.base * Pose::from_translation(translation)
        } else {
            self.base
        };
        self.estimate = Some((timestamp, estimate));
        self.log.push(NoiseSample {
            timestamp,
            translation,
            rotation,
        });
        self.frames += 1;
        self.status = TrackingStatus::Tracking;
        true
    }

    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let Some((t, pose)) = self.estimate else {
            cfg.publish("status", Timestamp::ZERO, OutputValue::Status(self.status));
            return false;
        };
        cfg.publish(POSE_CHANNEL, t, OutputValue::Pose(pose)) && cfg.publish("status", t, OutputValue::Status(self.status))
    }

    fn clean(&mut self) -> bool {
        let ok = if self.log_path.is_empty() {
            true
        } else {
            self.write_log().map_err(|e| log::error!("noisy-replay: {}: {e}", self.log_path)).is_ok()
        };
        *self = Self::default();
        ok
    }
}
