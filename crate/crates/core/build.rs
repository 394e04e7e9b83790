fn main() {
    // Link the system LAPACK/BLAS for the `lax` FFI symbols used by ndarray-linalg.
    println!("cargo:rustc-link-lib=dylib=lapack");
    println!("cargo:rustc-link-lib=dylib=openblas");
}
