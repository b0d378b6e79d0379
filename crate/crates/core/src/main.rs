use clap::Parser;

fn main() {
    // NMLAB_THREADS caps the rayon pool before any parallel work starts.
    if let Ok(value) = std::env::var("NMLAB_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("nmlab: ignoring NMLAB_THREADS={value} (want a positive integer)"),
        }
    }
    let cli = nmlab::cli::Cli::parse();
    std::process::exit(nmlab::cli::execute(cli));
}
