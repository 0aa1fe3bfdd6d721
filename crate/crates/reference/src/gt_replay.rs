use slambench_core::api::{ConfigApi, FrameView, OutputKind, OutputValue, SlamAlgorithm, TrackingStatus, POSE_CHANNEL};
use slambench_core::datafile::payload::decode_pose;
use slambench_core::datafile::SensorType;
use slambench_core::geometry::{Pose, Timestamp};

/// Publishes the most recent ground-truth pose verbatim.
#[derive(Debug, Default)]
pub struct GtReplay {
    gt_sensor: Option<u32>,
    last: Option<(Timestamp, Pose)>,
    status: TrackingStatus,
}

impl SlamAlgorithm for GtReplay {
    fn new_configuration(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        true
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        self.gt_sensor = crate::find_sensor(&cfg.sensors(), SensorType::GtPose);
        if self.gt_sensor.is_none() {
            log::error!("gt-replay needs a ground-truth pose sensor");
            return false;
        }
        cfg.register_output(POSE_CHANNEL, OutputKind::Pose) && cfg.register_output("status", OutputKind::TrackingStatus)
    }

    fn update_frame(&mut self, _cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool {
        if Some(frame.sensor_index) != self.gt_sensor {
            return false;
        }
        match decode_pose(frame.payload) {
            Ok(pose) => {
                self.last = Some((frame.timestamp, pose));
                true
            }
            Err(e) => {
                log::warn!("gt-replay: bad pose payload: {e}");
                false
            }
        }
    }

    fn process_once(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        if self.last.is_some() {
            self.status = TrackingStatus::Tracking;
        }
        true
    }

    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let Some((t, pose)) = self.last else {
            cfg.publish("status", Timestamp::ZERO, OutputValue::Status(self.status));
            return false;
        };
        cfg.publish(POSE_CHANNEL, t, OutputValue::Pose(pose)) && cfg.publish("status", t, OutputValue::Status(self.status))
    }

    fn clean(&mut self) -> bool {
        *self = Self::default();
        true
    }
}
