use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geometry::Timestamp;

use super::format::{
    CameraParams, ImuParams, PayloadLen, PixelFormat, SensorDescriptor, SensorType, DATAFILE_VERSION, FRAME_HEADER_LEN,
};
use super::{DatafileError, FrameRecord, Section};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatafileHeader {
    pub version: u32,
    pub sensor_count: u32,
}

/// An opened datafile. The header and sensor table are validated on open;
/// frames are validated as they are streamed through a [`FrameCursor`].
#[derive(Clone, Debug)]
pub struct Datafile {
    path: PathBuf,
    sensors: Vec<SensorDescriptor>,
    frames_offset: u64,
    file_len: u64,
}

/// A frame borrowed from a cursor's internal buffer; valid until the next
/// call on the cursor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameRef<'a> {
    pub timestamp: Timestamp,
    pub sensor_index: u32,
    pub payload: &'a [u8],
    /// Byte offset of the frame header in the file.
    pub offset: u64,
}

impl FrameRef<'_> {
    pub fn to_record(&self) -> FrameRecord {
        FrameRecord {
            timestamp: self.timestamp,
            sensor_index: self.sensor_index,
            payload: self.payload.to_vec(),
        }
    }
}

struct Input {
    reader: BufReader<File>,
    offset: u64,
}

impl Input {
    /// Reads as many bytes as available up to `buf.len()`.
    fn read_full(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.reader.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        self.offset += filled as u64;
        Ok(filled)
    }

    fn read_exact(&mut self, buf: &mut [u8], context: &'static str) -> Result<(), DatafileError> {
        let start = self.offset;
        let n = self.read_full(buf)?;
        if n < buf.len() {
            return Err(DatafileError::TruncatedFile { offset: start + n as u64, context });
        }
        Ok(())
    }

    fn read_u32(&mut self, context: &'static str) -> Result<u32, DatafileError> {
        let mut b = [0u8; 4];
        self.read_exact(&mut b, context)?;
        Ok(u32::from_le_bytes(b))
    }

    fn read_f32(&mut self, context: &'static str) -> Result<f32, DatafileError> {
        Ok(f32::from_bits(self.read_u32(context)?))
    }

    fn skip(&mut self, n: u64) -> Result<(), DatafileError> {
        self.reader.seek_relative(n as i64)?;
        self.offset += n;
        Ok(())
    }
}

fn open_input(path: &Path, offset: u64) -> Result<Input, DatafileError> {
    let mut file = File::open(path)?;
    file.seek(SeekFrom::Start(offset))?;
    Ok(Input {
        reader: BufReader::with_capacity(1 << 16, file),
        offset,
    })
}

impl Datafile {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DatafileError> {
        let path = path.as_ref().to_path_buf();
        let file_len = std::fs::metadata(&path)?.len();
        let mut input = open_input(&path, 0)?;
        let version = input.read_u32("header version")?;
        if version != DATAFILE_VERSION {
            return Err(DatafileError::BadMagicOrVersion { found: version, offset: 0 });
        }
        let count = input.read_u32("header sensor count")?;
        if count == 0 {
            return Err(DatafileError::InvariantViolation {
                offset: 4,
                reason: "sensor count must be at least 1".into(),
            });
        }
        // Every descriptor takes at least 4 bytes; reject absurd counts
        // before allocating.
        if u64::from(count) * 4 > file_len.saturating_sub(8) {
            return Err(DatafileError::TruncatedFile {
                offset: file_len,
                context: "sensor table",
            });
        }
        let mut sensors = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let offset = input.offset;
            let sensor = read_sensor(&mut input)?;
            sensor
                .validate()
                .map_err(|reason| DatafileError::InvariantViolation { offset, reason })?;
            sensors.push(sensor);
        }
        Ok(Self {
            path,
            sensors,
            frames_offset: input.offset,
            file_len,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn header(&self) -> DatafileHeader {
        DatafileHeader {
            version: DATAFILE_VERSION,
            sensor_count: self.sensors.len() as u32,
        }
    }

    pub fn sensors(&self) -> &[SensorDescriptor] {
        &self.sensors
    }

    /// Cursor over the ground-truth section.
    pub fn gt_frames(&self) -> Result<FrameCursor, DatafileError> {
        Ok(FrameCursor {
            input: open_input(&self.path, self.frames_offset)?,
            sensors: self.sensors.clone(),
            section: Section::GroundTruth,
            file_len: self.file_len,
            last: None,
            index: 0,
            buf: Vec::new(),
            pending: None,
            done: false,
        })
    }

    /// Cursor over the input section; skips the ground-truth section
    /// without reading its payloads.
    pub fn input_frames(&self) -> Result<FrameCursor, DatafileError> {
        let mut input = open_input(&self.path, self.frames_offset)?;
        let mut pending = None;
        while let Some(head) = read_frame_header(&mut input, &self.sensors)? {
            if !self.sensors[head.sensor_index as usize].is_ground_truth() {
                pending = Some(head);
                break;
            }
            let len = payload_len(&mut input, &self.sensors[head.sensor_index as usize], self.file_len)?;
            input.skip(len as u64)?;
        }
        Ok(FrameCursor {
            input,
            sensors: self.sensors.clone(),
            section: Section::Input,
            file_len: self.file_len,
            last: None,
            index: 0,
            buf: Vec::new(),
            done: pending.is_none(),
            pending,
        })
    }

    /// Scans the whole file (payloads are skipped, not read).
    pub fn summary(&self) -> Result<DatafileSummary, DatafileError> {
        let mut frames_per_sensor = vec![0u64; self.sensors.len()];
        let mut gt_frame_count = 0;
        let mut input_frame_count = 0;
        let mut first = None;
        let mut last = None;
        for section in [Section::GroundTruth, Section::Input] {
            let mut cursor = match section {
                Section::GroundTruth => self.gt_frames()?,
                Section::Input => self.input_frames()?,
            };
            while let Some(f) = cursor.next_header()? {
                frames_per_sensor[f.1 as usize] += 1;
                match section {
                    Section::GroundTruth => gt_frame_count += 1,
                    Section::Input => {
                        input_frame_count += 1;
                        first.get_or_insert(f.0);
                        last = Some(f.0);
                    }
                }
            }
        }
        let duration_s = match (first, last) {
            (Some(a), Some(b)) => b.secs_since(a),
            _ => 0.0,
        };
        Ok(DatafileSummary {
            path: self.path.display().to_string(),
            sensors: self.sensors.clone(),
            frames_per_sensor,
            gt_frame_count,
            input_frame_count,
            first_input: first,
            last_input: last,
            duration_s,
            size_bytes: self.file_len,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatafileSummary {
    pub path: String,
    pub sensors: Vec<SensorDescriptor>,
    pub frames_per_sensor: Vec<u64>,
    pub gt_frame_count: u64,
    pub input_frame_count: u64,
    pub first_input: Option<Timestamp>,
    pub last_input: Option<Timestamp>,
    /// Last minus first input timestamp.
    pub duration_s: f64,
    pub size_bytes: u64,
}

fn read_sensor(input: &mut Input) -> Result<SensorDescriptor, DatafileError> {
    let offset = input.offset;
    let raw_type = input.read_u32("sensor type")?;
    let sensor_type = SensorType::from_u32(raw_type).ok_or_else(|| DatafileError::InvariantViolation {
        offset,
        reason: format!("unknown sensor type {raw_type}"),
    })?;
    let ctx = "sensor parameters";
    Ok(match sensor_type {
        SensorType::CameraRgb | SensorType::CameraGrey | SensorType::CameraDepth => {
            let width = input.read_u32(ctx)?;
            let height = input.read_u32(ctx)?;
            let raw_format = input.read_u32(ctx)?;
            let pixel_format = PixelFormat::from_u32(raw_format).ok_or_else(|| DatafileError::InvariantViolation {
                offset: input.offset - 4,
                reason: format!("unknown pixel format {raw_format}"),
            })?;
            let mut f = [0f32; 11];
            for v in f.iter_mut() {
                *v = input.read_f32(ctx)?;
            }
            let params = CameraParams {
                width,
                height,
                pixel_format,
                rate_hz: f[0],
                fx: f[1],
                fy: f[2],
                cx: f[3],
                cy: f[4],
                distortion: [f[5], f[6], f[7], f[8], f[9]],
                depth_scale: f[10],
            };
            match sensor_type {
                SensorType::CameraRgb => SensorDescriptor::CameraRgb(params),
                SensorType::CameraGrey => SensorDescriptor::CameraGrey(params),
                _ => SensorDescriptor::CameraDepth(params),
            }
        }
        SensorType::Imu => SensorDescriptor::Imu(ImuParams {
            rate_hz: input.read_f32(ctx)?,
            gyro_noise: input.read_f32(ctx)?,
            accel_noise: input.read_f32(ctx)?,
        }),
        SensorType::GtPose => SensorDescriptor::GtPose,
        SensorType::GtPointCloud => SensorDescriptor::GtPointCloud,
        SensorType::PixelEvent => {
            return Err(DatafileError::UnsupportedSensor { sensor_type: raw_type, offset });
        }
    })
}

struct FrameHeader {
    offset: u64,
    timestamp: Timestamp,
    sensor_index: u32,
}

fn read_frame_header(input: &mut Input, sensors: &[SensorDescriptor]) -> Result<Option<FrameHeader>, DatafileError> {
    let offset = input.offset;
    let mut head = [0u8; FRAME_HEADER_LEN];
    let n = input.read_full(&mut head)?;
    if n == 0 {
        return Ok(None);
    }
    if n < FRAME_HEADER_LEN {
        return Err(DatafileError::TruncatedFile {
            offset: offset + n as u64,
            context: "frame header",
        });
    }
    let word = |i: usize| u32::from_le_bytes([head[i], head[i + 1], head[i + 2], head[i + 3]]);
    let timestamp = Timestamp::new(word(0), word(4)).map_err(|e| DatafileError::InvariantViolation {
        offset,
        reason: e.to_string(),
    })?;
    let sensor_index = word(8);
    if sensor_index as usize >= sensors.len() {
        return Err(DatafileError::InvariantViolation {
            offset: offset + 8,
            reason: format!("sensor index {sensor_index} out of range ({} sensors)", sensors.len()),
        });
    }
    Ok(Some(FrameHeader {
        offset,
        timestamp,
        sensor_index,
    }))
}

/// Payload length for the frame whose header was just read. For point
/// clouds this consumes the count prefix, which is then part of the length
/// returned minus 4.
fn payload_len(input: &mut Input, sensor: &SensorDescriptor, file_len: u64) -> Result<usize, DatafileError> {
    match sensor.payload_len() {
        PayloadLen::Fixed(n) => {
            if input.offset + n as u64 > file_len {
                return Err(DatafileError::TruncatedFile {
                    offset: file_len,
                    context: "frame payload",
                });
            }
            Ok(n)
        }
        PayloadLen::PointCloud => {
            let at = input.offset;
            let count = input.read_u32("point cloud count")? as u64;
            let len = count * 12;
            if input.offset + len > file_len {
                return Err(DatafileError::InvariantViolation {
                    offset: at,
                    reason: format!("point cloud count {count} exceeds the remaining file"),
                });
            }
            Ok(len as usize)
        }
    }
}

/// Sequential reader over one section of a datafile. Holds at most one
/// frame payload in memory.
pub struct FrameCursor {
    input: Input,
    sensors: Vec<SensorDescriptor>,
    section: Section,
    file_len: u64,
    last: Option<Timestamp>,
    index: usize,
    buf: Vec<u8>,
    pending: Option<FrameHeader>,
    done: bool,
}

impl FrameCursor {
    pub fn section(&self) -> Section {
        self.section
    }

    pub fn sensors(&self) -> &[SensorDescriptor] {
        &self.sensors
    }

    /// Capacity of the reused payload buffer.
    pub fn buffer_capacity(&self) -> usize {
        self.buf.capacity()
    }

    fn next_checked_header(&mut self) -> Result<Option<FrameHeader>, DatafileError> {
        if self.done {
            return Ok(None);
        }
        let head = match self.pending.take() {
            Some(h) => Some(h),
            None => read_frame_header(&mut self.input, &self.sensors).inspect_err(|_| self.done = true)?,
        };
        let Some(head) = head else {
            self.done = true;
            return Ok(None);
        };
        let is_gt = self.sensors[head.sensor_index as usize].is_ground_truth();
        match self.section {
            Section::GroundTruth if !is_gt => {
                self.done = true;
                return Ok(None);
            }
            Section::Input if is_gt => {
                self.done = true;
                return Err(DatafileError::InvariantViolation {
                    offset: head.offset,
                    reason: "ground-truth frame inside the input section".into(),
                });
            }
            _ => {}
        }
        if self.last.is_some_and(|prev| head.timestamp < prev) {
            self.done = true;
            return Err(DatafileError::InvariantViolation {
                offset: head.offset,
                reason: format!("timestamp {} earlier than the previous frame", head.timestamp),
            });
        }
        self.last = Some(head.timestamp);
        self.index += 1;
        Ok(Some(head))
    }

    /// Next frame header, skipping its payload.
    pub(crate) fn next_header(&mut self) -> Result<Option<(Timestamp, u32)>, DatafileError> {
        let Some(head) = self.next_checked_header()? else {
            return Ok(None);
        };
        let sensor = self.sensors[head.sensor_index as usize];
        let result = payload_len(&mut self.input, &sensor, self.file_len).and_then(|n| self.input.skip(n as u64));
        if let Err(e) = result {
            self.done = true;
            return Err(e);
        }
        Ok(Some((head.timestamp, head.sensor_index)))
    }

    /// Next frame of this section, or `None` at the end of the section.
    pub fn next_frame(&mut self) -> Result<Option<FrameRef<'_>>, DatafileError> {
        let Some(head) = self.next_checked_header()? else {
            return Ok(None);
        };
        let sensor = self.sensors[head.sensor_index as usize];
        let prefix_start = self.input.offset;
        let len = match payload_len(&mut self.input, &sensor, self.file_len) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Err(e);
            }
        };
        self.buf.clear();
        if sensor.payload_len() == PayloadLen::PointCloud {
            let count = (len / 12) as u32;
            debug_assert_eq!(self.input.offset, prefix_start + 4);
            self.buf.extend_from_slice(&count.to_le_bytes());
        }
        let start = self.buf.len();
        self.buf.resize(start + len, 0);
        if let Err(e) = self.input.read_exact(&mut self.buf[start..], "frame payload") {
            self.done = true;
            return Err(e);
        }
        Ok(Some(FrameRef {
            timestamp: head.timestamp,
            sensor_index: head.sensor_index,
            payload: &self.buf,
            offset: head.offset,
        }))
    }

    pub fn next_record(&mut self) -> Result<Option<FrameRecord>, DatafileError> {
        Ok(self.next_frame()?.map(|f| f.to_record()))
    }
}

/// Fully materialised datafile contents; intended for tests and small files.
#[derive(Clone, Debug, PartialEq)]
pub struct DatafileContents {
    pub sensors: Vec<SensorDescriptor>,
    pub gt_frames: Vec<FrameRecord>,
    pub in_frames: Vec<FrameRecord>,
}

pub fn read_datafile(path: impl AsRef<Path>) -> Result<DatafileContents, DatafileError> {
    let file = Datafile::open(path)?;
    let mut gt_frames = Vec::new();
    let mut cursor = file.gt_frames()?;
    while let Some(f) = cursor.next_record()? {
        gt_frames.push(f);
    }
    let mut in_frames = Vec::new();
    let mut cursor = file.input_frames()?;
    while let Some(f) = cursor.next_record()? {
        in_frames.push(f);
    }
    Ok(DatafileContents {
        sensors: file.sensors,
        gt_frames,
        in_frames,
    })
}
