use slambench_core::api::{ConfigApi, FrameView, OutputKind, ParameterSpec, SlamAlgorithm, POSE_CHANNEL};

#[derive(Default)]
struct DuplicateParameter;

impl SlamAlgorithm for DuplicateParameter {
    fn new_configuration(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        cfg.declare_parameter(ParameterSpec::int("r", "rate", "First declaration", 1));
        cfg.declare_parameter(ParameterSpec::int("r2", "rate", "Second declaration", 2));
        true
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        cfg.register_output(POSE_CHANNEL, OutputKind::Pose)
    }

    fn update_frame(&mut self, _cfg: &mut dyn ConfigApi, _frame: &FrameView<'_>) -> bool {
        false
    }

    fn process_once(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        true
    }

    fn update_outputs(&mut self, _cfg: &mut dyn ConfigApi) -> bool {
        false
    }

    fn clean(&mut self) -> bool {
        true
    }
}

slambench_core::export_algorithm!(DuplicateParameter);
