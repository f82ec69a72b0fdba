use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pickup_ffi::*;

fn last_error() -> String {
    let p = pk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn machine_spec(n_turns: usize) -> PkWindingSpec {
    let mut spec = unsafe { std::mem::zeroed::<PkWindingSpec>() };
    assert_eq!(unsafe { pk_winding_spec_default(&mut spec) }, PkStatus::Ok);
    spec.n_turns = n_turns;
    spec.pattern = PkPattern::Machine as u32;
    spec
}

fn params() -> PkParams {
    let mut p = unsafe { std::mem::zeroed::<PkParams>() };
    assert_eq!(unsafe { pk_params_default(&mut p) }, PkStatus::Ok);
    p
}

struct Owned {
    layout: *mut PkLayout,
    modes: *mut PkModes,
    wave: *mut PkWaveform,
}

impl Drop for Owned {
    fn drop(&mut self) {
        unsafe {
            pk_waveform_free(self.wave);
            pk_modes_free(self.modes);
            pk_layout_free(self.layout);
        }
    }
}

fn pipeline(n_turns: usize) -> Owned {
    let mut o = Owned {
        layout: ptr::null_mut(),
        modes: ptr::null_mut(),
        wave: ptr::null_mut(),
    };
    unsafe {
        assert_eq!(
            pk_layout_generate(&machine_spec(n_turns), 1e-3, &mut o.layout),
            PkStatus::Ok
        );
        assert_eq!(pk_modes_compute(o.layout, &params(), &mut o.modes), PkStatus::Ok);
        assert_eq!(
            pk_synthesize(o.modes, 44100, 0.05, 0, PkRanking::AbsS as u32, &mut o.wave),
            PkStatus::Ok
        );
    }
    o
}

#[test]
fn full_pipeline_through_handles() {
    let o = pipeline(32);
    unsafe {
        let mut n = 0usize;
        assert_eq!(pk_layout_n_turns(o.layout, &mut n), PkStatus::Ok);
        assert_eq!(n, 32);

        let mut hash = [0 as std::ffi::c_char; 65];
        assert_eq!(pk_layout_hash(o.layout, hash.as_mut_ptr(), hash.len()), PkStatus::Ok);
        let hex = CStr::from_ptr(hash.as_ptr()).to_str().unwrap();
        assert_eq!(hex.len(), 64);
        assert!(hex.bytes().all(|b| b.is_ascii_hexdigit()));

        let mut len = 0usize;
        assert_eq!(pk_modes_gamma2(o.modes, ptr::null_mut(), 0, &mut len), PkStatus::Ok);
        assert_eq!(len, 2 * 31);
        assert_eq!(pk_modes_s(o.modes, ptr::null_mut(), 0, &mut len), PkStatus::Ok);
        assert_eq!(len, 2 * 62);
        let mut s = vec![0.0; len];
        assert_eq!(pk_modes_s(o.modes, s.as_mut_ptr(), s.len(), &mut len), PkStatus::Ok);
        assert!(s.iter().all(|v| v.is_finite()));

        let mut res = f64::NAN;
        assert_eq!(pk_modes_residual_max(o.modes, &mut res), PkStatus::Ok);
        assert!(res < 1e-8, "residual {res}");

        let mut data: *const f64 = ptr::null();
        assert_eq!(pk_waveform_samples(o.wave, &mut data, &mut len), PkStatus::Ok);
        assert_eq!(len, 2205);
        let samples = std::slice::from_raw_parts(data, len);
        assert!(samples.iter().all(|v| v.is_finite()));

        let mut wav_len = 0usize;
        assert_eq!(
            pk_waveform_wav(o.wave, PkWavFormat::Pcm16 as u32, ptr::null_mut(), 0, &mut wav_len),
            PkStatus::Ok
        );
        assert_eq!(wav_len, 44 + 2 * 2205);
        let mut wav = vec![0u8; wav_len];
        assert_eq!(
            pk_waveform_wav(
                o.wave,
                PkWavFormat::Pcm16 as u32,
                wav.as_mut_ptr(),
                wav.len(),
                &mut wav_len
            ),
            PkStatus::Ok
        );
        assert_eq!(&wav[..4], b"RIFF");
        assert_eq!(&wav[8..12], b"WAVE");
    }
}

#[test]
fn edges_are_ordered_pairs_with_size_query() {
    let o = pipeline(16);
    unsafe {
        let mut len = 0usize;
        assert_eq!(pk_layout_edges(o.layout, ptr::null_mut(), 0, &mut len), PkStatus::Ok);
        assert!(len >= 2 * 15 && len.is_multiple_of(2));
        let mut buf = vec![0usize; len];
        assert_eq!(pk_layout_edges(o.layout, buf.as_mut_ptr(), len, &mut len), PkStatus::Ok);
        for pair in buf.chunks(2) {
            assert!(pair[0] < pair[1] && pair[1] < 16);
        }
        // Consecutive turns are always in contact.
        for k in 0..15 {
            assert!(buf.chunks(2).any(|p| p == [k, k + 1]), "missing edge {k}-{}", k + 1);
        }
    }
}

#[test]
fn short_buffers_are_rejected_without_writing() {
    let o = pipeline(12);
    unsafe {
        let mut buf = [7.5f64; 4];
        let mut len = 0usize;
        assert_eq!(
            pk_modes_s(o.modes, buf.as_mut_ptr(), buf.len(), &mut len),
            PkStatus::BufferTooSmall
        );
        assert_eq!(len, 2 * 22);
        assert_eq!(buf, [7.5; 4]);
        assert!(last_error().contains("capacity"));

        let mut hash = [0 as std::ffi::c_char; 64];
        assert_eq!(
            pk_layout_hash(o.layout, hash.as_mut_ptr(), hash.len()),
            PkStatus::BufferTooSmall
        );
    }
}

#[test]
fn null_pointers_report_status() {
    unsafe {
        assert_eq!(pk_winding_spec_default(ptr::null_mut()), PkStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut layout = ptr::null_mut();
        assert_eq!(
            pk_layout_generate(ptr::null(), 1e-3, &mut layout),
            PkStatus::NullPointer
        );
        assert!(layout.is_null());
        let mut n = 0usize;
        assert_eq!(pk_layout_n_turns(ptr::null(), &mut n), PkStatus::NullPointer);
        let o = pipeline(12);
        assert_eq!(
            pk_modes_s(o.modes, ptr::null_mut(), 0, ptr::null_mut()),
            PkStatus::NullPointer
        );
        pk_layout_free(ptr::null_mut());
        pk_modes_free(ptr::null_mut());
        pk_waveform_free(ptr::null_mut());
    }
}

#[test]
fn core_errors_map_to_codes() {
    unsafe {
        let mut spec = machine_spec(1000);
        spec.window_columns = 2;
        spec.max_layers = 2;
        let mut layout = ptr::null_mut();
        assert_eq!(pk_layout_generate(&spec, 1e-3, &mut layout), PkStatus::CapacityExceeded);
        assert!(layout.is_null());
        assert!(!last_error().is_empty());

        let mut spec = machine_spec(8);
        spec.pattern = 9;
        assert_eq!(pk_layout_generate(&spec, 1e-3, &mut layout), PkStatus::InvalidInput);
        assert!(last_error().contains("pattern"));

        let o = pipeline(12);
        let mut p = params();
        p.alpha = 0.0;
        p.r_dc_ohms = 0.0;
        let mut modes = ptr::null_mut();
        assert_eq!(pk_modes_compute(o.layout, &p, &mut modes), PkStatus::Degenerate);
        assert!(modes.is_null());
        p = params();
        p.m_henries = -1.0;
        assert_eq!(pk_modes_compute(o.layout, &p, &mut modes), PkStatus::InvalidInput);

        let mut wave = ptr::null_mut();
        assert_eq!(
            pk_synthesize(o.modes, 44100, 0.01, 4, 42, &mut wave),
            PkStatus::InvalidInput
        );
        assert_eq!(
            pk_synthesize(o.modes, 44100, 0.01, 1000, 0, &mut wave),
            PkStatus::InvalidInput
        );
        let mut len = 0usize;
        assert_eq!(
            pk_waveform_wav(o.wave, 5, ptr::null_mut(), 0, &mut len),
            PkStatus::InvalidInput
        );
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        assert_eq!(pk_winding_spec_default(ptr::null_mut()), PkStatus::NullPointer);
    }
    let other = std::thread::spawn(|| pk_last_error_message().is_null()).join().unwrap();
    assert!(other);
    assert!(!pk_last_error_message().is_null());
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(pk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

fn have_cc() -> bool {
    Command::new("cc")
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; skipping header check");
        return;
    }
    let header = include_dir().join("pickup.h");
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Wextra", "-Werror", "-x", lang])
            .arg(&header)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

/// The static library sits next to the test binary's parent `deps` dir.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    exe.ancestors()
        .skip(1)
        .map(|d| d.join("libpickup_ffi.a"))
        .find(|p| p.is_file())
}

#[test]
fn c_program_links_and_runs() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; skipping link check");
        return;
    }
    let lib = static_lib().expect("libpickup_ffi.a not found beside the test binary");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg("-std=c99")
        .arg("-I")
        .arg(include_dir())
        .arg(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "link failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "smoke failed: {stdout} {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("turns=24 hash_len=64 samples=80"), "{stdout}");
}
