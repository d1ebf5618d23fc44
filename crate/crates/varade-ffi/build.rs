//! Regenerates include/varade.h from the public extern "C" surface.

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out = std::path::Path::new(&crate_dir).join("include/varade.h");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(out);
        }
        // keep the checked-in header if generation fails; it only goes stale
        // when the extern surface changes
        Err(e) => println!("cargo:warning=cbindgen failed, keeping existing header: {e}"),
    }
}
