//! Real-decoder checks. They need an ffmpeg binary: `STYLECAST_FFMPEG` names
//! one explicitly, otherwise `ffmpeg` on PATH is used. Without either the
//! tests print a note and pass.

use std::path::{Path, PathBuf};
use std::process::Command;

use stylecast_core::media::{extract_media_series, FfmpegDecoder, MediaDecoder};

fn ffmpeg() -> Option<PathBuf> {
    let program = std::env::var_os("STYLECAST_FFMPEG").map(PathBuf::from).unwrap_or_else(|| "ffmpeg".into());
    let ok = Command::new(&program).arg("-version").output().is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("skipping: no ffmpeg (set STYLECAST_FFMPEG)");
    }
    ok.then_some(program)
}

fn render(program: &Path, out: &Path, args: &[&str]) {
    let status = Command::new(program)
        .args(["-nostdin", "-hide_banner", "-loglevel", "error", "-y"])
        .args(args)
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success(), "ffmpeg failed building {}", out.display());
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

#[test]
fn black_silent_clip_gives_flat_series() {
    let Some(program) = ffmpeg() else { return };
    let dir = tempfile::tempdir().unwrap();
    let clip = dir.path().join("black.mp4");
    render(
        &program,
        &clip,
        &[
            "-f", "lavfi", "-i", "color=c=black:s=64x48:r=25:d=3",
            "-f", "lavfi", "-i", "anullsrc=r=8000:cl=mono",
            "-t", "3", "-c:v", "libx264", "-pix_fmt", "yuv420p", "-c:a", "aac",
        ],
    );
    let s = extract_media_series(&clip, &FfmpegDecoder::new(&program)).unwrap();
    assert!((s.duration_s - 3.0).abs() < 0.2, "duration {}", s.duration_s);
    assert!(s.audio.values().iter().all(|v| *v == 0.0));
    assert!(s.light.values().iter().all(|v| *v == 0.0));
}

#[test]
fn flash_and_beep_peak_where_they_happen() {
    let Some(program) = ffmpeg() else { return };
    let dir = tempfile::tempdir().unwrap();
    let clip = dir.path().join("flash.mp4");
    render(
        &program,
        &clip,
        &[
            "-f", "lavfi", "-i", "color=c=black:s=64x48:r=25:d=2",
            "-f", "lavfi", "-i", "color=c=white:s=64x48:r=25:d=0.5",
            "-f", "lavfi", "-i", "color=c=black:s=64x48:r=25:d=2",
            "-f", "lavfi", "-i", "sine=f=440:r=8000:d=4.5",
            "-filter_complex",
            "[0:v][1:v][2:v]concat=n=3:v=1:a=0[v];[3:a]volume='if(between(t,3.2,3.6),1,0.01)':eval=frame[a]",
            "-map", "[v]", "-map", "[a]", "-c:v", "libx264", "-pix_fmt", "yuv420p", "-c:a", "aac",
        ],
    );
    let decoder = FfmpegDecoder::new(&program);
    let s = extract_media_series(&clip, &decoder).unwrap();
    let t_light = s.light.times()[argmax(s.light.values())];
    assert!((2.0..2.5).contains(&t_light), "light peak at {t_light}");
    let t_audio = s.audio.times()[argmax(s.audio.values())];
    assert!((3.1..3.7).contains(&t_audio), "audio peak at {t_audio}");

    let frames = decoder.extract_frames(&clip, &[0.0, 2.2, 4.0], dir.path()).unwrap();
    assert_eq!(frames, ["frame_000000.jpg", "frame_000001.jpg", "frame_000002.jpg"]);
    let mean = |name: &str| {
        let img = image::open(dir.path().join(name)).unwrap().to_luma8();
        img.pixels().map(|p| p.0[0] as f64).sum::<f64>() / img.pixels().len() as f64
    };
    assert!(mean(&frames[1]) > 200.0 && mean(&frames[0]) < 40.0);
}
