use std::env;
use std::path::PathBuf;

use cbindgen::{Config, EnumConfig, ExportConfig, Language, RenameRule};

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");

    let cfg = Config {
        language: Language::C,
        include_guard: Some(String::from("PICKUP_H")),
        cpp_compat: true,
        usize_is_size_t: true,
        documentation: true,
        enumeration: EnumConfig {
            rename_variants: RenameRule::QualifiedScreamingSnakeCase,
            ..Default::default()
        },
        // Passed across the boundary as u32, so nothing references them.
        export: ExportConfig {
            include: ["PkPattern", "PkRanking", "PkWavFormat"].map(String::from).to_vec(),
            ..Default::default()
        },
        ..Default::default()
    };

    cbindgen::Builder::new()
        .with_config(cfg)
        .with_crate(&crate_dir)
        .generate()
        .expect("Unable to generate bindings")
        .write_to_file(crate_dir.join("include").join("pickup.h"));
}
