//! Allocates and sleeps on request, so memory and timing probes can be
//! checked against known answers.

use std::time::Duration;

use slambench_core::api::{ConfigApi, FrameView, OutputKind, OutputValue, ParameterSpec, SlamAlgorithm, POSE_CHANNEL};
use slambench_core::geometry::{Pose, Timestamp};

const MIB: usize = 1 << 20;

#[derive(Default)]
struct Workload {
    blocks: Vec<Vec<u8>>,
    grow_mib: usize,
    sleep: Duration,
    last: Option<Timestamp>,
}

fn block(mib: usize) -> Vec<u8> {
    // touched so resident-set probes see it too
    vec![1u8; mib * MIB]
}

impl SlamAlgorithm for Workload {
    fn new_configuration(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        cfg.declare_parameter(ParameterSpec::int("a", "alloc-init-mib", "MiB allocated at init", 0).bounded(0.0, 4096.0))
            && cfg.declare_parameter(ParameterSpec::int("g", "grow-mib-per-frame", "MiB allocated per frame", 0).bounded(0.0, 1024.0))
            && cfg.declare_parameter(ParameterSpec::real("z", "sleep-ms", "Milliseconds slept per frame", 0.0).bounded(0.0, 1e4).live())
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let init = cfg.param_int("alloc-init-mib").unwrap_or(0) as usize;
        if init > 0 {
            self.blocks.push(block(init));
        }
        self.grow_mib = cfg.param_int("grow-mib-per-frame").unwrap_or(0) as usize;
        cfg.register_output(POSE_CHANNEL, OutputKind::Pose)
    }

    fn update_frame(&mut self, cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool {
        self.sleep = Duration::from_secs_f64(cfg.param_real("sleep-ms").unwrap_or(0.0) / 1000.0);
        self.last = Some(frame.timestamp);
        true
    }

    fn process_once(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        if self.grow_mib > 0 {
            self.blocks.push(block(self.grow_mib));
        }
        std::thread::sleep(self.sleep);
        true
    }

    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        match self.last {
            Some(t) => cfg.publish(POSE_CHANNEL, t, OutputValue::Pose(Pose::identity())),
            None => false,
        }
    }

    fn clean(&mut self) -> bool {
        *self = Self::default();
        true
    }
}

slambench_core::export_algorithm!(Workload);
