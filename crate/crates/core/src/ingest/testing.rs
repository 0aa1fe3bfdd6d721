//! Small on-disk dataset fixtures in the TUM, ICL-NUIM and EuRoC layouts,
//! with the exact payloads a faithful conversion must produce.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TumIntrinsics;
use crate::geometry::Timestamp;

/// Binary PPM (8-bit RGB).
pub fn write_ppm(path: &Path, width: u32, height: u32, rgb: &[u8]) -> std::io::Result<()> {
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(rgb);
    std::fs::write(path, bytes)
}

/// Binary PGM (8-bit grey).
pub fn write_pgm8(path: &Path, width: u32, height: u32, grey: &[u8]) -> std::io::Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    bytes.extend_from_slice(grey);
    std::fs::write(path, bytes)
}

/// Binary PGM with 16-bit samples (big-endian on disk).
pub fn write_pgm16(path: &Path, width: u32, height: u32, depth: &[u16]) -> std::io::Result<()> {
    let mut bytes = format!("P5\n{width} {height}\n65535\n").into_bytes();
    for v in depth {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    std::fs::write(path, bytes)
}

/// What a converted fixture must contain.
#[derive(Clone, Debug, Default)]
pub struct FixtureExpectation {
    /// Per camera: (timestamp, payload in datafile layout).
    pub cameras: Vec<Vec<(Timestamp, Vec<u8>)>>,
    /// (timestamp, tx ty tz, qw qx qy qz).
    pub poses: Vec<(Timestamp, [f64; 3], [f64; 4])>,
    /// (timestamp, gyro, accel).
    pub imu: Vec<(Timestamp, [f32; 3], [f32; 3])>,
    pub cloud: Vec<[f32; 3]>,
}

pub const FIXTURE_WIDTH: u32 = 4;
pub const FIXTURE_HEIGHT: u32 = 3;

/// Calibration that fits the 4x3 fixture rasters.
pub const FIXTURE_INTRINSICS: TumIntrinsics = TumIntrinsics::Custom([2.0, 2.0, 1.5, 1.0], [0.0; 5]);

fn stamp(s: u32, ns: u32) -> Timestamp {
    Timestamp::new(s, ns).expect("valid fixture timestamp")
}

/// TUM layout with `frames` RGB and depth images whose timestamps are
/// offset from each other, and one ground-truth row per frame (the first is
/// the identity). `with_gt = false` writes an empty groundtruth.txt.
pub fn write_tum_fixture(dir: &Path, frames: usize, with_gt: bool, seed: u64) -> std::io::Result<FixtureExpectation> {
    write_tum_fixture_sized(dir, frames, with_gt, seed, (FIXTURE_WIDTH, FIXTURE_HEIGHT))
}

pub fn write_tum_fixture_sized(
    dir: &Path,
    frames: usize,
    with_gt: bool,
    seed: u64,
    (w, h): (u32, u32),
) -> std::io::Result<FixtureExpectation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::fs::create_dir_all(dir.join("rgb"))?;
    std::fs::create_dir_all(dir.join("depth"))?;
    let mut rgb_list = String::from("# color images\n# timestamp filename\n");
    let mut depth_list = String::from("# depth maps\n");
    let mut gt_list = String::from("# ground truth trajectory\n# timestamp tx ty tz qx qy qz qw\n");
    let mut expect = FixtureExpectation {
        cameras: vec![Vec::new(), Vec::new()],
        ..Default::default()
    };
    for i in 0..frames {
        let base_ns = 175_304_000 + i as u32 * 33_331_000;
        let t_rgb = stamp(1_305_031_102, base_ns);
        let t_depth = stamp(1_305_031_102, base_ns + 12_345_000);
        let rgb: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
        let depth: Vec<u16> = (0..w * h).map(|_| rng.random()).collect();
        let rgb_name = format!("rgb/{t_rgb}.ppm");
        let depth_name = format!("depth/{t_depth}.pgm");
        write_ppm(&dir.join(&rgb_name), w, h, &rgb)?;
        write_pgm16(&dir.join(&depth_name), w, h, &depth)?;
        // TUM lists carry six decimals
        rgb_list += &format!("{}.{:06} {rgb_name}\n", t_rgb.seconds(), t_rgb.nanoseconds() / 1000);
        depth_list += &format!("{}.{:06} {depth_name}\n", t_depth.seconds(), t_depth.nanoseconds() / 1000);
        expect.cameras[0].push((t_rgb, rgb));
        expect.cameras[1].push((t_depth, depth.iter().flat_map(|v| v.to_le_bytes()).collect()));

        let t_gt = stamp(1_305_031_102, base_ns + 5_000_000);
        let (t, q) = if i == 0 {
            ([0.0; 3], [1.0, 0.0, 0.0, 0.0])
        } else {
            let t = [i as f64 * 0.1, -0.05 * i as f64, 1.5];
            let angle: f64 = 0.02 * i as f64;
            ([t[0], t[1], t[2]], [(angle / 2.0).cos(), 0.0, 0.0, (angle / 2.0).sin()])
        };
        gt_list += &format!(
            "{}.{:04} {} {} {} {} {} {} {}\n",
            t_gt.seconds(),
            t_gt.nanoseconds() / 100_000,
            t[0],
            t[1],
            t[2],
            q[1],
            q[2],
            q[3],
            q[0]
        );
        expect.poses.push((stamp(t_gt.seconds(), t_gt.nanoseconds() / 100_000 * 100_000), t, q));
    }
    std::fs::write(dir.join("rgb.txt"), rgb_list)?;
    std::fs::write(dir.join("depth.txt"), depth_list)?;
    if with_gt {
        std::fs::write(dir.join("groundtruth.txt"), gt_list)?;
    } else {
        std::fs::write(dir.join("groundtruth.txt"), "# empty\n")?;
        expect.poses.clear();
    }
    Ok(expect)
}

/// ICL-NUIM layout: a TUM fixture whose trajectory lives in a
/// `*.gt.freiburg` file, plus an optional ASCII PLY scene cloud.
pub fn write_icl_nuim_fixture(dir: &Path, frames: usize, cloud_points: usize, seed: u64) -> std::io::Result<FixtureExpectation> {
    let mut expect = write_tum_fixture(dir, frames, true, seed)?;
    std::fs::rename(dir.join("groundtruth.txt"), dir.join("livingRoom0.gt.freiburg"))?;
    if cloud_points > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut ply = format!(
            "ply\nformat ascii 1.0\ncomment fixture\nelement vertex {cloud_points}\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
        );
        for _ in 0..cloud_points {
            // values with short decimal forms round-trip through f32 text
            let p = [
                rng.random_range(-2000..2000) as f32 / 1000.0,
                rng.random_range(-2000..2000) as f32 / 1000.0,
                rng.random_range(0..3000) as f32 / 1000.0,
            ];
            ply += &format!("{} {} {} 200 100 50\n", p[0], p[1], p[2]);
            expect.cloud.push(p);
        }
        std::fs::write(dir.join("scene.ply"), ply)?;
    }
    Ok(expect)
}

/// EuRoC layout under `dir/mav0` with one or two cameras, an IMU whose
/// first row is at rest (gyro 0, accel (0, 0, -9.81)), and a state CSV.
pub fn write_euroc_fixture(dir: &Path, frames: usize, stereo: bool, seed: u64) -> std::io::Result<FixtureExpectation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = dir.join("mav0");
    let (w, h) = (FIXTURE_WIDTH, FIXTURE_HEIGHT);
    let base: u64 = 1_403_636_579_763_555_584;
    let mut expect = FixtureExpectation::default();
    let cams: &[&str] = if stereo { &["cam0", "cam1"] } else { &["cam0"] };
    for cam in cams {
        std::fs::create_dir_all(root.join(cam).join("data"))?;
        let mut csv = String::from("#timestamp [ns],filename\n");
        let mut frames_out = Vec::new();
        for i in 0..frames as u64 {
            let t = base + i * 50_000_000;
            let grey: Vec<u8> = (0..w * h).map(|_| rng.random()).collect();
            write_pgm8(&root.join(cam).join("data").join(format!("{t}.pgm")), w, h, &grey)?;
            csv += &format!("{t},{t}.pgm\n");
            frames_out.push((Timestamp::from_nanos(t).expect("fixture time"), grey));
        }
        std::fs::write(root.join(cam).join("data.csv"), csv)?;
        std::fs::write(
            root.join(cam).join("sensor.yaml"),
            "sensor_type: camera\nrate_hz: 20\nresolution: [4, 3]\nintrinsics: [458.654, 457.296, 1.5, 1.0]\ndistortion_coefficients: [-0.28340811, 0.07395907, 0.00019359, 1.76187114e-05]\nT_BS:\n  cols: 4\n  rows: 4\n",
        )?;
        expect.cameras.push(frames_out);
    }

    std::fs::create_dir_all(root.join("imu0"))?;
    let mut imu = String::from(
        "#timestamp [ns],w_RS_S_x [rad s^-1],w_RS_S_y [rad s^-1],w_RS_S_z [rad s^-1],a_RS_S_x [m s^-2],a_RS_S_y [m s^-2],a_RS_S_z [m s^-2]\n",
    );
    for i in 0..(frames as u64 * 4) {
        let t = base + i * 5_000_000;
        let (g, a) = if i == 0 {
            ([0.0f32; 3], [0.0f32, 0.0, -9.81])
        } else {
            (
                [i as f32 * 0.01, -0.02, 0.003],
                [9.0 + i as f32 * 0.125, 0.25, -0.5],
            )
        };
        imu += &format!("{t},{},{},{},{},{},{}\n", g[0], g[1], g[2], a[0], a[1], a[2]);
        expect.imu.push((Timestamp::from_nanos(t).expect("fixture time"), g, a));
    }
    std::fs::write(root.join("imu0").join("data.csv"), imu)?;
    std::fs::write(
        root.join("imu0").join("sensor.yaml"),
        "sensor_type: imu\nrate_hz: 200\ngyroscope_noise_density: 1.6968e-04\naccelerometer_noise_density: 2.0000e-3\n",
    )?;

    std::fs::create_dir_all(root.join("state_groundtruth_estimate0"))?;
    let mut gt = String::from(
        "#timestamp, p_RS_R_x [m], p_RS_R_y [m], p_RS_R_z [m], q_RS_w [], q_RS_x [], q_RS_y [], q_RS_z [], v_RS_R_x [m s^-1], v_RS_R_y [m s^-1], v_RS_R_z [m s^-1], b_w_RS_S_x [rad s^-1], b_w_RS_S_y [rad s^-1], b_w_RS_S_z [rad s^-1], b_a_RS_S_x [m s^-2], b_a_RS_S_y [m s^-2], b_a_RS_S_z [m s^-2]\n",
    );
    for i in 0..frames as u64 {
        let t = base + 1_000_000 + i * 50_000_000;
        let p = [4.688 + i as f64 * 0.01, -1.786, 0.783];
        let angle = 0.1 * i as f64;
        let q = [(angle / 2.0).cos(), (angle / 2.0).sin(), 0.0, 0.0];
        gt += &format!(
            "{t},{},{},{},{},{},{},{},0,0,0,0,0,0,0,0,0\n",
            p[0], p[1], p[2], q[0], q[1], q[2], q[3]
        );
        expect.poses.push((Timestamp::from_nanos(t).expect("fixture time"), p, q));
    }
    std::fs::write(root.join("state_groundtruth_estimate0").join("data.csv"), gt)?;
    Ok(expect)
}
