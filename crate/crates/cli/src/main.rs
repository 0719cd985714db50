fn main() {
    if let Ok(v) = std::env::var("SELSAMPLE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => {
                eprintln!("error: SELSAMPLE_THREADS must be a positive integer, got {v:?}");
                std::process::exit(2);
            }
        }
    }
    std::process::exit(selsample_cli::main_with_args(std::env::args_os()));
}
