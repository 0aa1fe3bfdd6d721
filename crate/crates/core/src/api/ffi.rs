//! The C-compatible plugin boundary. The harness passes an [`SbConfig`]
//! (context pointer plus callback table) into every entry point; plugins
//! written in Rust wrap it in [`CConfig`] and never touch the raw types.

use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;

use super::config::{AlgorithmConfig, ConfigApi};
use super::outputs::{OutputKind, OutputValue, TrackingStatus};
use super::params::{ParamValue, ParameterSpec, ValueType};
use super::{ApiError, FrameView, SlamAlgorithm};
use crate::datafile::{CameraParams, ImuParams, PixelFormat, SensorDescriptor, SensorType};
use crate::geometry::{Pose, Timestamp, Vec3};

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SbValue {
    /// A [`ValueType`] discriminant.
    pub tag: u32,
    pub int_value: i64,
    pub real_value: f64,
    pub bool_value: bool,
    /// UTF-8 bytes, not NUL-terminated.
    pub str_ptr: *const c_char,
    pub str_len: usize,
}

impl SbValue {
    fn empty() -> Self {
        Self {
            tag: 0,
            int_value: 0,
            real_value: 0.0,
            bool_value: false,
            str_ptr: std::ptr::null(),
            str_len: 0,
        }
    }

    /// Borrows `value`; string data must outlive the returned struct.
    fn borrow(value: &ParamValue) -> Self {
        let mut v = Self::empty();
        v.tag = value.value_type() as u32;
        match value {
            ParamValue::Int(i) => v.int_value = *i,
            ParamValue::Real(r) => v.real_value = *r,
            ParamValue::Bool(b) => v.bool_value = *b,
            ParamValue::Str(s) => {
                v.str_ptr = s.as_ptr().cast();
                v.str_len = s.len();
            }
        }
        v
    }

    /// # Safety
    /// `str_ptr` must reference `str_len` readable bytes when the tag is
    /// `String`.
    unsafe fn to_value(self) -> Option<ParamValue> {
        Some(match ValueType::from_u32(self.tag)? {
            ValueType::Int => ParamValue::Int(self.int_value),
            ValueType::Real => ParamValue::Real(self.real_value),
            ValueType::Bool => ParamValue::Bool(self.bool_value),
            ValueType::String => {
                let bytes = if self.str_len == 0 {
                    &[][..]
                } else {
                    std::slice::from_raw_parts(self.str_ptr.cast::<u8>(), self.str_len)
                };
                ParamValue::Str(std::str::from_utf8(bytes).ok()?.to_string())
            }
        })
    }
}

#[repr(C)]
pub struct SbParamSpec {
    pub short_name: *const c_char,
    pub long_name: *const c_char,
    pub description: *const c_char,
    pub value_type: u32,
    pub default_value: SbValue,
    pub has_bounds: bool,
    pub min: f64,
    pub max: f64,
    pub live: bool,
}

/// Flattened sensor descriptor; fields that do not apply are zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SbSensor {
    pub sensor_type: u32,
    pub width: u32,
    pub height: u32,
    pub pixel_format: u32,
    pub rate_hz: f32,
    pub fx: f32,
    pub fy: f32,
    pub cx: f32,
    pub cy: f32,
    pub distortion: [f32; 5],
    pub depth_scale: f32,
    pub gyro_noise: f32,
    pub accel_noise: f32,
}

impl SbSensor {
    pub fn from_descriptor(d: &SensorDescriptor) -> Self {
        let mut s = SbSensor {
            sensor_type: d.sensor_type() as u32,
            ..Default::default()
        };
        if let Some(c) = d.camera() {
            s.width = c.width;
            s.height = c.height;
            s.pixel_format = c.pixel_format as u32;
            s.rate_hz = c.rate_hz;
            s.fx = c.fx;
            s.fy = c.fy;
            s.cx = c.cx;
            s.cy = c.cy;
            s.distortion = c.distortion;
            s.depth_scale = c.depth_scale;
        }
        if let SensorDescriptor::Imu(imu) = d {
            s.rate_hz = imu.rate_hz;
            s.gyro_noise = imu.gyro_noise;
            s.accel_noise = imu.accel_noise;
        }
        s
    }

    pub fn to_descriptor(&self) -> Option<SensorDescriptor> {
        let camera = || {
            Some(CameraParams {
                width: self.width,
                height: self.height,
                pixel_format: PixelFormat::from_u32(self.pixel_format)?,
                rate_hz: self.rate_hz,
                fx: self.fx,
                fy: self.fy,
                cx: self.cx,
                cy: self.cy,
                distortion: self.distortion,
                depth_scale: self.depth_scale,
            })
        };
        Some(match SensorType::from_u32(self.sensor_type)? {
            SensorType::CameraRgb => SensorDescriptor::CameraRgb(camera()?),
            SensorType::CameraGrey => SensorDescriptor::CameraGrey(camera()?),
            SensorType::CameraDepth => SensorDescriptor::CameraDepth(camera()?),
            SensorType::Imu => SensorDescriptor::Imu(ImuParams {
                rate_hz: self.rate_hz,
                gyro_noise: self.gyro_noise,
                accel_noise: self.accel_noise,
            }),
            SensorType::GtPose => SensorDescriptor::GtPose,
            SensorType::GtPointCloud => SensorDescriptor::GtPointCloud,
            SensorType::PixelEvent => return None,
        })
    }
}

#[repr(C)]
pub struct SbFrame {
    pub seconds: u32,
    pub nanoseconds: u32,
    pub sensor_index: u32,
    pub data: *const u8,
    pub len: usize,
}

/// One published value. `kind` selects which fields are read:
/// pose `[qw, qx, qy, qz, x, y, z]`; points/features as packed f32 with
/// `count` elements; image as `width * height * 3` bytes; status; scalar.
#[repr(C)]
pub struct SbOutput {
    pub kind: u32,
    pub seconds: u32,
    pub nanoseconds: u32,
    pub pose: [f64; 7],
    pub floats: *const f32,
    pub count: usize,
    pub width: u32,
    pub height: u32,
    pub bytes: *const u8,
    pub bytes_len: usize,
    pub status: u32,
    pub scalar: f64,
}

#[repr(C)]
pub struct SbConfigVTable {
    pub declare_parameter: unsafe extern "C" fn(ctx: *mut c_void, spec: *const SbParamSpec) -> bool,
    pub get_parameter: unsafe extern "C" fn(ctx: *mut c_void, name: *const c_char, out: *mut SbValue) -> bool,
    pub sensor_count: unsafe extern "C" fn(ctx: *mut c_void) -> u32,
    pub sensor: unsafe extern "C" fn(ctx: *mut c_void, index: u32, out: *mut SbSensor) -> bool,
    pub ui_enabled: unsafe extern "C" fn(ctx: *mut c_void) -> bool,
    pub register_output: unsafe extern "C" fn(ctx: *mut c_void, name: *const c_char, kind: u32) -> bool,
    pub publish: unsafe extern "C" fn(ctx: *mut c_void, name: *const c_char, out: *const SbOutput) -> bool,
}

/// The configuration object handed to every entry point.
#[repr(C)]
pub struct SbConfig {
    pub ctx: *mut c_void,
    pub vtable: *const SbConfigVTable,
}

pub type ConfigFn = unsafe extern "C" fn(*mut SbConfig) -> bool;
pub type UpdateFrameFn = unsafe extern "C" fn(*mut SbConfig, *const SbFrame) -> bool;
pub type CleanFn = unsafe extern "C" fn() -> bool;

// ---- harness side ----

pub(crate) static HOST_VTABLE: SbConfigVTable = SbConfigVTable {
    declare_parameter: host_declare_parameter,
    get_parameter: host_get_parameter,
    sensor_count: host_sensor_count,
    sensor: host_sensor,
    ui_enabled: host_ui_enabled,
    register_output: host_register_output,
    publish: host_publish,
};

unsafe fn host<'a>(ctx: *mut c_void) -> &'a mut AlgorithmConfig {
    &mut *ctx.cast::<AlgorithmConfig>()
}

unsafe fn c_str<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

unsafe extern "C" fn host_declare_parameter(ctx: *mut c_void, spec: *const SbParamSpec) -> bool {
    let cfg = host(ctx);
    let Some(spec) = spec.as_ref() else { return false };
    let (Some(short), Some(long), Some(desc)) = (c_str(spec.short_name), c_str(spec.long_name), c_str(spec.description))
    else {
        cfg.record(ApiError::InvalidParameter("parameter names must be valid UTF-8".into()));
        return false;
    };
    let (Some(value_type), Some(default)) = (ValueType::from_u32(spec.value_type), spec.default_value.to_value()) else {
        cfg.record(ApiError::InvalidParameter(format!("bad type or default for {long}")));
        return false;
    };
    let declared = ParameterSpec {
        short_name: short.to_string(),
        long_name: long.to_string(),
        description: desc.to_string(),
        value_type,
        default,
        bounds: spec.has_bounds.then_some((spec.min, spec.max)),
        live: spec.live,
    };
    cfg.declare_parameter(declared)
}

unsafe extern "C" fn host_get_parameter(ctx: *mut c_void, name: *const c_char, out: *mut SbValue) -> bool {
    let cfg = host(ctx);
    let (Some(name), Some(out)) = (c_str(name), out.as_mut()) else { return false };
    let Some(value) = cfg.parameter(name) else { return false };
    if let ParamValue::Str(s) = &value {
        // valid until the next string lookup
        cfg.scratch = CString::new(s.as_str()).unwrap_or_default();
        *out = SbValue::empty();
        out.tag = ValueType::String as u32;
        out.str_ptr = cfg.scratch.as_ptr();
        out.str_len = cfg.scratch.as_bytes().len();
    } else {
        *out = SbValue::borrow(&value);
    }
    true
}

unsafe extern "C" fn host_sensor_count(ctx: *mut c_void) -> u32 {
    host(ctx).sensor_table().len() as u32
}

unsafe extern "C" fn host_sensor(ctx: *mut c_void, index: u32, out: *mut SbSensor) -> bool {
    let cfg = host(ctx);
    match (cfg.sensor_table().get(index as usize), out.as_mut()) {
        (Some(d), Some(out)) => {
            *out = SbSensor::from_descriptor(d);
            true
        }
        _ => false,
    }
}

unsafe extern "C" fn host_ui_enabled(ctx: *mut c_void) -> bool {
    host(ctx).ui_enabled()
}

unsafe extern "C" fn host_register_output(ctx: *mut c_void, name: *const c_char, kind: u32) -> bool {
    let cfg = host(ctx);
    match (c_str(name), OutputKind::from_u32(kind)) {
        (Some(name), Some(kind)) => cfg.register_output(name, kind),
        _ => false,
    }
}

unsafe extern "C" fn host_publish(ctx: *mut c_void, name: *const c_char, out: *const SbOutput) -> bool {
    let cfg = host(ctx);
    let (Some(name), Some(out)) = (c_str(name), out.as_ref()) else { return false };
    let Ok(timestamp) = Timestamp::new(out.seconds, out.nanoseconds) else { return false };
    let floats = |per: usize| -> &[f32] {
        if out.floats.is_null() || out.count == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(out.floats, out.count * per)
        }
    };
    let value = match OutputKind::from_u32(out.kind) {
        Some(OutputKind::Pose) => {
            let [w, x, y, z, tx, ty, tz] = out.pose;
            let norm = (w * w + x * x + y * y + z * z).sqrt();
            if !((norm - 1.0).abs() <= 1e-6) {
                cfg.record(ApiError::InvalidPose(format!("quaternion norm {norm} on channel {name}")));
                return false;
            }
            match Pose::from_wxyz(w, x, y, z, Vec3::new(tx, ty, tz)) {
                Ok(p) => OutputValue::Pose(p),
                Err(e) => {
                    cfg.record(ApiError::InvalidPose(e.to_string()));
                    return false;
                }
            }
        }
        Some(OutputKind::PointCloud) => {
            let f = floats(3);
            OutputValue::Points(std::slice::from_raw_parts(f.as_ptr().cast::<[f32; 3]>(), f.len() / 3))
        }
        Some(OutputKind::FeatureList) => {
            let f = floats(2);
            OutputValue::Features(std::slice::from_raw_parts(f.as_ptr().cast::<[f32; 2]>(), f.len() / 2))
        }
        Some(OutputKind::RgbFrame) => {
            let expected = out.width as usize * out.height as usize * 3;
            if out.bytes_len != expected || (expected > 0 && out.bytes.is_null()) {
                return false;
            }
            let rgb = if expected == 0 { &[][..] } else { std::slice::from_raw_parts(out.bytes, expected) };
            OutputValue::Image {
                width: out.width,
                height: out.height,
                rgb,
            }
        }
        Some(OutputKind::TrackingStatus) => match TrackingStatus::from_u32(out.status) {
            Some(s) => OutputValue::Status(s),
            None => return false,
        },
        Some(OutputKind::TimingPhase | OutputKind::MemoryCounter) => OutputValue::Scalar(out.scalar),
        None => return false,
    };
    cfg.publish(name, timestamp, value)
}

// ---- plugin side ----

/// Plugin-side view of an [`SbConfig`], implementing [`ConfigApi`] over the
/// harness callbacks.
pub struct CConfig<'a> {
    raw: &'a SbConfig,
}

impl<'a> CConfig<'a> {
    /// # Safety
    /// `raw` must point to a live configuration from the harness.
    pub unsafe fn from_raw(raw: *mut SbConfig) -> Option<Self> {
        let raw = raw.as_ref()?;
        if raw.vtable.is_null() {
            return None;
        }
        Some(Self { raw })
    }

    fn vt(&self) -> &SbConfigVTable {
        // SAFETY: checked non-null in from_raw; the harness keeps it alive
        unsafe { &*self.raw.vtable }
    }
}

fn cstring(s: &str) -> CString {
    CString::new(s.replace('\0', "")).unwrap_or_default()
}

impl ConfigApi for CConfig<'_> {
    fn declare_parameter(&mut self, spec: ParameterSpec) -> bool {
        let (short, long, desc) = (cstring(&spec.short_name), cstring(&spec.long_name), cstring(&spec.description));
        let (min, max) = spec.bounds.unwrap_or((0.0, 0.0));
        let raw = SbParamSpec {
            short_name: short.as_ptr(),
            long_name: long.as_ptr(),
            description: desc.as_ptr(),
            value_type: spec.value_type as u32,
            default_value: SbValue::borrow(&spec.default),
            has_bounds: spec.bounds.is_some(),
            min,
            max,
            live: spec.live,
        };
        unsafe { (self.vt().declare_parameter)(self.raw.ctx, &raw) }
    }

    fn parameter(&self, name: &str) -> Option<ParamValue> {
        let name = cstring(name);
        let mut out = SbValue::empty();
        unsafe {
            if !(self.vt().get_parameter)(self.raw.ctx, name.as_ptr(), &mut out) {
                return None;
            }
            out.to_value()
        }
    }

    fn sensors(&self) -> Vec<SensorDescriptor> {
        let n = unsafe { (self.vt().sensor_count)(self.raw.ctx) };
        (0..n)
            .filter_map(|i| {
                let mut s = SbSensor::default();
                unsafe { (self.vt().sensor)(self.raw.ctx, i, &mut s) }.then_some(())?;
                s.to_descriptor()
            })
            .collect()
    }

    fn ui_enabled(&self) -> bool {
        unsafe { (self.vt().ui_enabled)(self.raw.ctx) }
    }

    fn register_output(&mut self, name: &str, kind: OutputKind) -> bool {
        let name = cstring(name);
        unsafe { (self.vt().register_output)(self.raw.ctx, name.as_ptr(), kind as u32) }
    }

    fn publish(&mut self, name: &str, timestamp: Timestamp, value: OutputValue<'_>) -> bool {
        let name = cstring(name);
        let mut out = SbOutput {
            kind: 0,
            seconds: timestamp.seconds(),
            nanoseconds: timestamp.nanoseconds(),
            pose: [0.0; 7],
            floats: std::ptr::null(),
            count: 0,
            width: 0,
            height: 0,
            bytes: std::ptr::null(),
            bytes_len: 0,
            status: 0,
            scalar: 0.0,
        };
        out.kind = match value {
            OutputValue::Pose(p) => {
                let [w, x, y, z] = p.quaternion_wxyz();
                let t = p.translation();
                out.pose = [w, x, y, z, t.x, t.y, t.z];
                OutputKind::Pose
            }
            OutputValue::Points(points) => {
                out.floats = points.as_ptr().cast();
                out.count = points.len();
                OutputKind::PointCloud
            }
            OutputValue::Features(features) => {
                out.floats = features.as_ptr().cast();
                out.count = features.len();
                OutputKind::FeatureList
            }
            OutputValue::Image { width, height, rgb } => {
                out.width = width;
                out.height = height;
                out.bytes = rgb.as_ptr();
                out.bytes_len = rgb.len();
                OutputKind::RgbFrame
            }
            OutputValue::Status(s) => {
                out.status = s as u32;
                OutputKind::TrackingStatus
            }
            // the harness tells timing and memory apart by the registered kind
            OutputValue::Scalar(v) => {
                out.scalar = v;
                OutputKind::TimingPhase
            }
        } as u32;
        unsafe { (self.vt().publish)(self.raw.ctx, name.as_ptr(), &out) }
    }
}

/// Storage for the single algorithm instance of a loaded plugin library.
pub type InstanceSlot<T> = Mutex<Option<T>>;

fn guarded(f: impl FnOnce() -> bool) -> bool {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        log::error!("plugin panicked; reporting failure to the harness");
        false
    })
}

fn with_instance<T: SlamAlgorithm>(slot: &InstanceSlot<T>, cfg: *mut SbConfig, f: impl FnOnce(&mut T, &mut CConfig) -> bool) -> bool {
    guarded(|| {
        let mut guard = slot.lock().unwrap_or_else(|e| e.into_inner());
        let (Some(instance), Some(mut c)) = (guard.as_mut(), unsafe { CConfig::from_raw(cfg) }) else {
            return false;
        };
        f(instance, &mut c)
    })
}

#[doc(hidden)]
pub fn export_new_configuration<T: SlamAlgorithm + Default>(slot: &InstanceSlot<T>, cfg: *mut SbConfig) -> bool {
    guarded(|| {
        *slot.lock().unwrap_or_else(|e| e.into_inner()) = Some(T::default());
        with_instance(slot, cfg, |a, c| a.new_configuration(c))
    })
}

#[doc(hidden)]
pub fn export_init<T: SlamAlgorithm>(slot: &InstanceSlot<T>, cfg: *mut SbConfig) -> bool {
    with_instance(slot, cfg, |a, c| a.init(c))
}

/// # Safety
/// `frame` must be null or point to a frame whose payload stays valid for
/// the call.
#[doc(hidden)]
pub unsafe fn export_update_frame<T: SlamAlgorithm>(slot: &InstanceSlot<T>, cfg: *mut SbConfig, frame: *const SbFrame) -> bool {
    with_instance(slot, cfg, |a, c| {
        let Some(frame) = (unsafe { frame.as_ref() }) else { return false };
        let Ok(timestamp) = Timestamp::new(frame.seconds, frame.nanoseconds) else { return false };
        let payload = if frame.len == 0 {
            &[][..]
        } else {
            unsafe { std::slice::from_raw_parts(frame.data, frame.len) }
        };
        a.update_frame(
            c,
            &FrameView {
                timestamp,
                sensor_index: frame.sensor_index,
                payload,
            },
        )
    })
}

#[doc(hidden)]
pub fn export_process_once<T: SlamAlgorithm>(slot: &InstanceSlot<T>, cfg: *mut SbConfig) -> bool {
    with_instance(slot, cfg, |a, c| a.process_once(c))
}

#[doc(hidden)]
pub fn export_update_outputs<T: SlamAlgorithm>(slot: &InstanceSlot<T>, cfg: *mut SbConfig) -> bool {
    with_instance(slot, cfg, |a, c| a.update_outputs(c))
}

#[doc(hidden)]
pub fn export_clean<T: SlamAlgorithm>(slot: &InstanceSlot<T>) -> bool {
    guarded(|| {
        let instance = slot.lock().unwrap_or_else(|e| e.into_inner()).take();
        match instance {
            Some(mut a) => a.clean(),
            None => false,
        }
    })
}

/// Exports the plugin symbol table for an algorithm type implementing
/// [`SlamAlgorithm`] and [`Default`]. Use once per `cdylib`.
#[macro_export]
macro_rules! export_algorithm {
    ($ty:ty) => {
        static SB_INSTANCE: $crate::api::ffi::InstanceSlot<$ty> = ::std::sync::Mutex::new(None);

        #[no_mangle]
        #[allow(non_upper_case_globals)]
        pub static sb_api_version: u32 = $crate::api::API_VERSION;

        #[no_mangle]
        pub extern "C" fn sb_new_slam_configuration(cfg: *mut $crate::api::ffi::SbConfig) -> bool {
            $crate::api::ffi::export_new_configuration(&SB_INSTANCE, cfg)
        }

        #[no_mangle]
        pub extern "C" fn sb_init_slam_system(cfg: *mut $crate::api::ffi::SbConfig) -> bool {
            $crate::api::ffi::export_init(&SB_INSTANCE, cfg)
        }

        #[no_mangle]
        #[allow(clippy::not_unsafe_ptr_arg_deref)]
        pub extern "C" fn sb_update_frame(cfg: *mut $crate::api::ffi::SbConfig, frame: *const $crate::api::ffi::SbFrame) -> bool {
            // SAFETY: the harness passes a frame valid for this call
            unsafe { $crate::api::ffi::export_update_frame(&SB_INSTANCE, cfg, frame) }
        }

        #[no_mangle]
        pub extern "C" fn sb_process_once(cfg: *mut $crate::api::ffi::SbConfig) -> bool {
            $crate::api::ffi::export_process_once(&SB_INSTANCE, cfg)
        }

        #[no_mangle]
        pub extern "C" fn sb_update_outputs(cfg: *mut $crate::api::ffi::SbConfig) -> bool {
            $crate::api::ffi::export_update_outputs(&SB_INSTANCE, cfg)
        }

        #[no_mangle]
        pub extern "C" fn sb_clean_slam_system() -> bool {
            $crate::api::ffi::export_clean(&SB_INSTANCE)
        }
    };
}
