fn main() {
    if let Some(n) = std::env::var("PUBSHARE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialisation is the only failure mode; ignore it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    std::process::exit(pubshare::cli::run(std::env::args_os()));
}
