use std::time::Instant;

use slambench_core::api::{
    ConfigApi, FrameView, OutputKind, OutputValue, ParameterSpec, SlamAlgorithm, TrackingStatus, POSE_CHANNEL,
};
use slambench_core::camera::PinholeIntrinsics;
use slambench_core::datafile::payload::decode_depth16_into;
use slambench_core::datafile::{CameraParams, SensorDescriptor};
use slambench_core::geometry::{Pose, Timestamp, Vec3};
use slambench_core::metrics::{icp_point_to_plane, IcpParams, KdTree};

const PHASES: [&str; 3] = ["preprocess", "icp", "integrate"];

/// Cosine of the largest angle allowed between the two one-sided normal
/// estimates at a pixel; above it the pixel sits on a crease.
const CREASE_COS: f64 = 0.985;

/// Frame-to-frame depth odometry: each depth image is unprojected,
/// subsampled and registered onto the previous one with point-to-plane ICP.
#[derive(Default)]
pub struct IcpOdometry {
    depth_sensor: Option<u32>,
    camera: Option<CameraParams>,
    intrinsics: Option<PinholeIntrinsics>,
    // two raw depth buffers; `newest` indexes the latest frame
    raw: [Vec<u16>; 2],
    newest: usize,
    stamps: [Timestamp; 2],
    received: u64,
    grid: Vec<Option<Vec3>>,
    cloud: Cloud,
    reference: Option<(KdTree, Vec<Vec3>)>,
    pose: Pose,
    velocity: Pose,
    published: Option<Timestamp>,
    map: Vec<[f32; 3]>,
    phases: [f64; 3],
    status: TrackingStatus,
    view: Option<Vec<u8>>,
    buffer_bytes: f64,
}

/// Preprocessed frame: the strided source samples, and every sample with
/// a reliable normal as the registration target for the next frame.
#[derive(Default)]
struct Cloud {
    points: Vec<Vec3>,
    surface: Vec<Vec3>,
    normals: Vec<Vec3>,
}

impl Cloud {
    fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
            surface: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
        }
    }

    fn clear(&mut self) {
        self.points.clear();
        self.surface.clear();
        self.normals.clear();
    }
}

impl IcpOdometry {
    fn icp_params(cfg: &dyn ConfigApi) -> IcpParams {
        IcpParams {
            max_iterations: cfg.param_int("max-iterations").unwrap_or(30) as usize,
            tolerance: cfg.param_real("tolerance").unwrap_or(1e-7),
            max_correspondence: cfg.param_real("max-correspondence").unwrap_or(0.05),
        }
    }

    /// Unprojects buffer `which`. Every pixel with a reliable normal goes
    /// into the registration surface, and every `stride`-th of those in
    /// both directions becomes a source point.
    fn preprocess(&mut self, which: usize, stride: usize) -> Cloud {
        let cam = self.camera.expect("initialised");
        let k = self.intrinsics.expect("initialised");
        let (w, h) = (cam.width as usize, cam.height as usize);
        let scale = f64::from(cam.depth_scale);
        let raw = &self.raw[which];
        self.grid.clear();
        for v in 0..h {
            for u in 0..w {
                let d = raw[v * w + u];
                self.grid.push((d != 0).then(|| k.unproject(u as f64, v as f64, f64::from(d) * scale)));
            }
        }
        let mut cloud = std::mem::take(&mut self.cloud);
        cloud.clear();
        let at = |u: usize, v: usize| self.grid[v * w + u];
        for v in 0..h {
            for u in 0..w {
                let Some(p) = at(u, v) else { continue };
                if u == 0 || v == 0 || u + 1 == w || v + 1 == h {
                    continue;
                }
                let (Some((r, d)), Some((l, up))) = (at(u + 1, v).zip(at(u, v + 1)), at(u - 1, v).zip(at(u, v - 1))) else {
                    continue;
                };
                let n1 = (r - p).cross(&(d - p));
                let n2 = (p - l).cross(&(p - up));
                let (Some(n1), Some(n2)) = (n1.try_normalize(1e-12), n2.try_normalize(1e-12)) else { continue };
                if n1.dot(&n2) >= CREASE_COS {
                    if u % stride == 0 && v % stride == 0 {
                        cloud.points.push(p);
                    }
                    cloud.surface.push(p);
                    cloud.normals.push((n1 + n2).normalize());
                }
            }
        }
        cloud
    }

    fn render_view(&mut self) {
        let Some(view) = self.view.as_mut() else { return };
        let raw = &self.raw[self.newest];
        let max = raw.iter().copied().max().unwrap_or(0).max(1);
        for (px, &d) in view.chunks_exact_mut(3).zip(raw) {
            let g = (u32::from(d) * 255 / u32::from(max)) as u8;
            px.fill(g);
        }
    }
}

impl SlamAlgorithm for IcpOdometry {
    fn new_configuration(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        [
            ParameterSpec::int("s", "stride", "Pixel subsampling stride", 2).bounded(1.0, 64.0),
            ParameterSpec::int("i", "max-iterations", "Maximum ICP iterations per frame", 30).bounded(1.0, 1000.0),
            ParameterSpec::real("t", "tolerance", "ICP convergence tolerance (m)", 1e-7).bounded(1e-15, 1.0),
            ParameterSpec::real("c", "max-correspondence", "Maximum correspondence distance (m)", 0.05)
                .bounded(1e-6, 10.0),
            ParameterSpec::real("l", "lost-threshold", "Residual above which tracking is lost (m)", 0.02)
                .bounded(1e-9, 10.0)
                .live(),
        ]
        .into_iter()
        .all(|spec| cfg.declare_parameter(spec))
    }

    fn init(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let sensors = cfg.sensors();
        let Some((index, camera)) = sensors.iter().enumerate().find_map(|(i, s)| match s {
            SensorDescriptor::CameraDepth(c) => Some((i as u32, *c)),
            _ => None,
        }) else {
            log::error!("icp-odometry needs a depth camera");
            return false;
        };
        let pixels = camera.width as usize * camera.height as usize;
        self.depth_sensor = Some(index);
        self.camera = Some(camera);
        self.intrinsics = Some(camera.intrinsics());
        self.raw = [vec![0; pixels], vec![0; pixels]];
        self.grid = Vec::with_capacity(pixels);
        self.cloud = Cloud::with_capacity(pixels);
        self.map = Vec::with_capacity(pixels);
        self.buffer_bytes = (2 * pixels * size_of::<u16>()
            + pixels * size_of::<Option<Vec3>>()
            + 3 * pixels * size_of::<Vec3>()
            + pixels * size_of::<[f32; 3]>()) as f64;

        let mut ok = cfg.register_output(POSE_CHANNEL, OutputKind::Pose)
            && cfg.register_output("status", OutputKind::TrackingStatus)
            && cfg.register_output("map", OutputKind::PointCloud)
            && cfg.register_output("memory", OutputKind::MemoryCounter);
        for phase in PHASES {
            ok &= cfg.register_output(phase, OutputKind::TimingPhase);
        }
        if cfg.ui_enabled() {
            self.view = Some(vec![0; pixels * 3]);
            self.buffer_bytes += (pixels * 3) as f64;
            ok &= cfg.register_output("depth-view", OutputKind::RgbFrame);
        }
        ok
    }

    fn update_frame(&mut self, _cfg: &mut dyn ConfigApi, frame: &FrameView<'_>) -> bool {
        if Some(frame.sensor_index) != self.depth_sensor {
            return false;
        }
        if frame.payload.len() != self.raw[0].len() * 2 {
            log::warn!("icp-odometry: depth frame of {} bytes ignored", frame.payload.len());
            return false;
        }
        if self.received > 0 {
            self.newest = 1 - self.newest;
        }
        let slot = &mut self.raw[self.newest];
        decode_depth16_into(frame.payload, slot);
        self.stamps[self.newest] = frame.timestamp;
        self.received += 1;
        self.received >= 2
    }

    fn process_once(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        if self.received < 2 {
            return false;
        }
        let stride = cfg.param_int("stride").unwrap_or(2).max(1) as usize;
        let params = Self::icp_params(cfg);
        let lost_threshold = cfg.param_real("lost-threshold").unwrap_or(0.02);

        let start = Instant::now();
        if self.reference.is_none() {
            let previous = self.preprocess(1 - self.newest, stride);
            self.reference = Some((KdTree::new(&previous.surface), previous.normals.clone()));
            self.cloud = previous;
        }
        let cloud = self.preprocess(self.newest, stride);
        let preprocessed = Instant::now();

        let (tree, normals) = self.reference.as_ref().expect("built above");
        let result = icp_point_to_plane(&cloud.points, tree, normals, self.velocity, &params);
        let registered = Instant::now();

        match result {
            Ok(r) if r.residual <= lost_threshold => {
                self.velocity = r.transform;
                self.pose = self.pose * r.transform;
                self.status = TrackingStatus::Tracking;
            }
            Ok(r) => {
                log::warn!("icp-odometry: residual {:.4} above threshold, tracking lost", r.residual);
                self.velocity = Pose::identity();
                self.status = TrackingStatus::Lost;
            }
            Err(e) => {
                log::warn!("icp-odometry: {e}, tracking lost");
                self.velocity = Pose::identity();
                self.status = TrackingStatus::Lost;
            }
        }
        self.map.clear();
        if self.status == TrackingStatus::Tracking {
            self.map.extend(cloud.points.iter().map(|p| {
                let w = self.pose.transform_point(p);
                [w.x as f32, w.y as f32, w.z as f32]
            }));
        }
        self.reference = Some((KdTree::new(&cloud.surface), cloud.normals.clone()));
        self.cloud = cloud;
        self.published = Some(self.stamps[self.newest]);
        let integrated = Instant::now();

        self.phases = [
            (preprocessed - start).as_secs_f64(),
            (registered - preprocessed).as_secs_f64(),
            (integrated - registered).as_secs_f64(),
        ];
        true
    }

    fn update_outputs(&mut self, cfg: &mut dyn ConfigApi) -> bool {
        let Some(t) = self.published else {
            cfg.publish("status", Timestamp::ZERO, OutputValue::Status(self.status));
            return false;
        };
        let mut ok = cfg.publish(POSE_CHANNEL, t, OutputValue::Pose(self.pose))
            && cfg.publish("status", t, OutputValue::Status(self.status))
            && cfg.publish("map", t, OutputValue::Points(&self.map))
            && cfg.publish("memory", t, OutputValue::Scalar(self.buffer_bytes));
        for (name, secs) in PHASES.iter().zip(self.phases) {
            ok &= cfg.publish(name, t, OutputValue::Scalar(secs));
        }
        if self.view.is_some() {
            self.render_view();
            let cam = self.camera.expect("initialised");
            let view = self.view.as_deref().unwrap_or_default();
            ok &= cfg.publish(
                "depth-view",
                t,
                OutputValue::Image {
                    width: cam.width,
                    height: cam.height,
                    rgb: view,
                },
            );
        }
        ok
    }

    fn clean(&mut self) -> bool {
        *self = Self::default();
        true
    }
}
