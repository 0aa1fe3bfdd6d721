use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::geometry::Timestamp;

use super::format::{PayloadLen, SensorDescriptor, DATAFILE_VERSION};
use super::{DatafileError, FrameRecord, Section};

/// Incremental writer: ground-truth frames first, then input frames, each
/// section in non-decreasing timestamp order.
pub struct DatafileWriter<W: Write> {
    out: W,
    sensors: Vec<SensorDescriptor>,
    section: Section,
    last: Option<Timestamp>,
    index: usize,
}

impl DatafileWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>, sensors: &[SensorDescriptor]) -> Result<Self, DatafileError> {
        validate_sensors(sensors)?;
        let file = File::create(path)?;
        Self::new(BufWriter::new(file), sensors)
    }
}

pub(crate) fn validate_sensors(sensors: &[SensorDescriptor]) -> Result<(), DatafileError> {
    if sensors.is_empty() {
        return Err(DatafileError::InvalidSensor {
            index: 0,
            reason: "a datafile needs at least one sensor".into(),
        });
    }
    for (index, s) in sensors.iter().enumerate() {
        s.validate()
            .map_err(|reason| DatafileError::InvalidSensor { index, reason })?;
    }
    Ok(())
}

impl<W: Write> DatafileWriter<W> {
    pub fn new(mut out: W, sensors: &[SensorDescriptor]) -> Result<Self, DatafileError> {
        validate_sensors(sensors)?;
        let mut header = Vec::with_capacity(8 + sensors.iter().map(|s| s.encoded_len()).sum::<usize>());
        header.extend_from_slice(&DATAFILE_VERSION.to_le_bytes());
        header.extend_from_slice(&(sensors.len() as u32).to_le_bytes());
        for s in sensors {
            s.encode(&mut header);
        }
        out.write_all(&header)?;
        Ok(Self {
            out,
            sensors: sensors.to_vec(),
            section: Section::GroundTruth,
            last: None,
            index: 0,
        })
    }

    pub fn write_gt_frame(&mut self, timestamp: Timestamp, sensor_index: u32, payload: &[u8]) -> Result<(), DatafileError> {
        if self.section == Section::Input {
            return Err(DatafileError::WrongSection {
                index: self.index,
                sensor_index,
                section: Section::Input,
            });
        }
        self.write_frame(Section::GroundTruth, timestamp, sensor_index, payload)
    }

    pub fn write_input_frame(&mut self, timestamp: Timestamp, sensor_index: u32, payload: &[u8]) -> Result<(), DatafileError> {
        if self.section == Section::GroundTruth {
            self.section = Section::Input;
            self.last = None;
            self.index = 0;
        }
        self.write_frame(Section::Input, timestamp, sensor_index, payload)
    }

    fn write_frame(&mut self, section: Section, timestamp: Timestamp, sensor_index: u32, payload: &[u8]) -> Result<(), DatafileError> {
        check_frame(&self.sensors, section, self.index, self.last, timestamp, sensor_index, payload)?;
        let mut head = [0u8; 12];
        head[0..4].copy_from_slice(&timestamp.seconds().to_le_bytes());
        head[4..8].copy_from_slice(&timestamp.nanoseconds().to_le_bytes());
        head[8..12].copy_from_slice(&sensor_index.to_le_bytes());
        self.out.write_all(&head)?;
        self.out.write_all(payload)?;
        self.last = Some(timestamp);
        self.index += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, DatafileError> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub(crate) fn check_frame(
    sensors: &[SensorDescriptor],
    section: Section,
    index: usize,
    last: Option<Timestamp>,
    timestamp: Timestamp,
    sensor_index: u32,
    payload: &[u8],
) -> Result<(), DatafileError> {
    let sensor = sensors
        .get(sensor_index as usize)
        .ok_or(DatafileError::BadSensorIndex { section, index, sensor_index })?;
    if sensor.is_ground_truth() != (section == Section::GroundTruth) {
        return Err(DatafileError::WrongSection { index, sensor_index, section });
    }
    if last.is_some_and(|prev| timestamp < prev) {
        return Err(DatafileError::UnsortedFrames { section, index });
    }
    let expected = match sensor.payload_len() {
        PayloadLen::Fixed(n) => n,
        PayloadLen::PointCloud => {
            if payload.len() < 4 {
                4
            } else {
                4 + 12 * u32::from_le_bytes([payload[0], payload[1], payload[2], payload[3]]) as usize
            }
        }
    };
    if payload.len() != expected {
        return Err(DatafileError::PayloadSizeMismatch {
            section,
            index,
            expected,
            found: payload.len(),
        });
    }
    Ok(())
}

/// Writes a complete datafile. All frames are validated before the file is
/// created, so a failed call leaves no partial output behind.
pub fn write_datafile(
    path: impl AsRef<Path>,
    sensors: &[SensorDescriptor],
    gt_frames: &[FrameRecord],
    in_frames: &[FrameRecord],
) -> Result<(), DatafileError> {
    validate_sensors(sensors)?;
    for (section, frames) in [(Section::GroundTruth, gt_frames), (Section::Input, in_frames)] {
        let mut last = None;
        for (index, f) in frames.iter().enumerate() {
            check_frame(sensors, section, index, last, f.timestamp, f.sensor_index, &f.payload)?;
            last = Some(f.timestamp);
        }
    }
    let mut writer = DatafileWriter::create(path, sensors)?;
    for f in gt_frames {
        writer.write_gt_frame(f.timestamp, f.sensor_index, &f.payload)?;
    }
    for f in in_frames {
        writer.write_input_frame(f.timestamp, f.sensor_index, &f.payload)?;
    }
    writer.finish()?;
    Ok(())
}
