use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryProbeKind {
    /// Net bytes held by the process allocator.
    Alloc,
    /// Resident set size reported by the OS.
    Rss,
}

impl std::str::FromStr for MemoryProbeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alloc" => Ok(Self::Alloc),
            "rss" => Ok(Self::Rss),
            other => Err(format!("unknown memory probe `{other}` (expected alloc or rss)")),
        }
    }
}

/// Process memory probe. Readings are relative to the value at creation.
#[derive(Debug, Clone)]
pub struct MemoryProbe {
    kind: MemoryProbeKind,
    baseline: i64,
    fallback_reason: Option<String>,
}

impl MemoryProbe {
    /// Creates the requested probe, falling back to resident-set size when
    /// the allocator cannot be queried.
    pub fn new(requested: MemoryProbeKind) -> Self {
        let (kind, fallback_reason) = match requested {
            MemoryProbeKind::Alloc => match allocator_bytes() {
                Ok(_) => (MemoryProbeKind::Alloc, None),
                Err(e) => (MemoryProbeKind::Rss, Some(e.to_string())),
            },
            MemoryProbeKind::Rss => (MemoryProbeKind::Rss, None),
        };
        let mut probe = Self {
            kind,
            baseline: 0,
            fallback_reason,
        };
        probe.baseline = probe.absolute().unwrap_or(0);
        probe
    }

    pub fn kind(&self) -> MemoryProbeKind {
        self.kind
    }

    /// Why the requested probe was replaced, if it was.
    pub fn fallback_reason(&self) -> Option<&str> {
        self.fallback_reason.as_deref()
    }

    pub fn reset(&mut self) {
        self.baseline = self.absolute().unwrap_or(0);
    }

    /// Net bytes since creation (or the last reset).
    pub fn sample(&self) -> Result<i64, MetricsError> {
        Ok(self.absolute()? - self.baseline)
    }

    fn absolute(&self) -> Result<i64, MetricsError> {
        match self.kind {
            MemoryProbeKind::Alloc => allocator_bytes(),
            MemoryProbeKind::Rss => resident_bytes(),
        }
    }
}

/// Bytes currently handed out by the C allocator, from `malloc_info`. Unlike
/// `mallinfo2` this covers every arena, so allocations made on other threads
/// are counted too.
#[cfg(all(target_os = "linux", target_env = "gnu"))]
pub(crate) fn allocator_bytes() -> Result<i64, MetricsError> {
    let xml = malloc_info_xml()?;
    parse_malloc_info(&xml).ok_or_else(|| MetricsError::ProbeUnavailable("unrecognised malloc_info output".into()))
}

#[cfg(not(all(target_os = "linux", target_env = "gnu")))]
pub(crate) fn allocator_bytes() -> Result<i64, MetricsError> {
    Err(MetricsError::ProbeUnavailable("allocator statistics need glibc".into()))
}

#[cfg(all(target_os = "linux", target_env = "gnu"))]
fn malloc_info_xml() -> Result<String, MetricsError> {
    let mut buf: *mut libc::c_char = std::ptr::null_mut();
    let mut len: libc::size_t = 0;
    // SAFETY: open_memstream allocates `buf`, which is valid after fclose
    // and released with free.
    unsafe {
        let stream = libc::open_memstream(&mut buf, &mut len);
        if stream.is_null() {
            return Err(MetricsError::ProbeUnavailable("open_memstream failed".into()));
        }
        let rc = libc::malloc_info(0, stream);
        libc::fclose(stream);
        if buf.is_null() {
            return Err(MetricsError::ProbeUnavailable("malloc_info produced no output".into()));
        }
        let text = String::from_utf8_lossy(std::slice::from_raw_parts(buf as *const u8, len)).into_owned();
        libc::free(buf.cast());
        if rc != 0 {
            return Err(MetricsError::ProbeUnavailable("malloc_info failed".into()));
        }
        Ok(text)
    }
}

/// In-use bytes from the process-wide totals that follow the per-heap
/// blocks: arena memory minus free chunks, plus mmapped chunks.
fn parse_malloc_info(xml: &str) -> Option<i64> {
    let tail = &xml[xml.rfind("</heap>")? + "</heap>".len()..];
    let mut fast = None;
    let mut rest = None;
    let mut mmap = None;
    let mut current = None;
    for line in tail.lines() {
        let line = line.trim();
        let attr = |name: &str| -> Option<i64> {
            let key = format!("{name}=\"");
            let start = line.find(&key)? + key.len();
            let end = line[start..].find('"')? + start;
            line[start..end].parse().ok()
        };
        if line.starts_with("<total type=\"fast\"") {
            fast = attr("size");
        } else if line.starts_with("<total type=\"rest\"") {
            rest = attr("size");
        } else if line.starts_with("<total type=\"mmap\"") {
            mmap = attr("size");
        } else if line.starts_with("<system type=\"current\"") {
            current = attr("size");
        }
    }
    Some(current? - fast? - rest? + mmap?)
}

#[cfg(target_os = "linux")]
pub(crate) fn resident_bytes() -> Result<i64, MetricsError> {
    let statm = std::fs::read_to_string("/proc/self/statm")
        .map_err(|e| MetricsError::ProbeUnavailable(format!("/proc/self/statm: {e}")))?;
    let pages: i64 = statm
        .split_whitespace()
        .nth(1)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| MetricsError::ProbeUnavailable("malformed /proc/self/statm".into()))?;
    // SAFETY: sysconf has no preconditions.
    let page = unsafe { libc::sysconf(libc::_SC_PAGESIZE) };
    Ok(pages * page as i64)
}

#[cfg(not(target_os = "linux"))]
pub(crate) fn resident_bytes() -> Result<i64, MetricsError> {
    Err(MetricsError::ProbeUnavailable("resident set size needs /proc".into()))
}

/// Timestamped power readings `(seconds, watts)`, sorted by time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    samples: Vec<(f64, f64)>,
}

impl PowerTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::ProbeUnavailable("empty power trace".into()));
        }
        if samples.iter().any(|(t, w)| !t.is_finite() || !w.is_finite()) {
            return Err(MetricsError::ProbeUnavailable("non-finite power sample".into()));
        }
        if samples.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(MetricsError::ProbeUnavailable("power trace is not sorted".into()));
        }
        Ok(Self { samples })
    }

    /// Reads `<seconds> <watts>` lines; blank lines and `#` comments are
    /// skipped.
    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MetricsError::ProbeUnavailable(format!("{}: {e}", path.display())))?;
        let mut samples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace().map(str::parse::<f64>);
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(t)), Some(Ok(w)), None) => samples.push((t, w)),
                _ => {
                    return Err(MetricsError::ProbeUnavailable(format!(
                        "{}:{}: expected `<seconds> <watts>`",
                        path.display(),
                        n + 1
                    )))
                }
            }
        }
        Self::new(samples)
    }

    /// Linear interpolation, held constant outside the trace.
    pub fn sample(&self, t: f64) -> f64 {
        let s = &self.samples;
        let i = s.partition_point(|&(ts, _)| ts <= t);
        if i == 0 {
            return s[0].1;
        }
        if i == s.len() {
            return s[s.len() - 1].1;
        }
        let (t0, w0) = s[i - 1];
        let (t1, w1) = s[i];
        w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum PowerProbe {
    #[default]
    None,
    Trace(PowerTrace),
}

impl PowerProbe {
    /// Watts at `t` seconds since the run started; `None` when unprobed.
    pub fn sample(&self, t: f64) -> Option<f64> {
        match self {
            PowerProbe::None => None,
            PowerProbe::Trace(trace) => Some(trace.sample(t)),
        }
    }
}
