#[cfg(feature = "cbindgen")]
fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let config = cbindgen::Config::from_file(format!("{crate_dir}/cbindgen.toml")).unwrap();
    cbindgen::generate_with_config(&crate_dir, config)
        .expect("cannot generate bindings")
        .write_to_file(format!("{crate_dir}/include/maxreward.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}

#[cfg(not(feature = "cbindgen"))]
fn main() {}
