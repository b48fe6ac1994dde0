use log::LevelFilter;

fn main() {
    env_logger::Builder::new()
        .filter_level(LevelFilter::Info)
        .format_timestamp(None)
        .init();
    std::process::exit(firepinn::cli::main_with_args(std::env::args_os()));
}
