use std::process::ExitCode;

use clap::Parser;

use diolab_cli::args::{to_config, Cli};
use diolab_cli::experiment::{Format, Status};
use diolab_cli::output::render;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let format = cli.format;
    let (cfg, base) = to_config(cli)?;
    let to_stdout = cfg.output.is_none();
    let (manifest, outcome, provenance) = diolab_cli::run(&cfg, base.as_deref())?;
    if to_stdout {
        let fmt = format.unwrap_or(Format::Json);
        print!("{}", render(fmt, &provenance, &outcome)?);
        eprintln!("{}", serde_json::to_string(&manifest)?);
    } else {
        println!("{}", serde_json::to_string_pretty(&manifest)?);
    }
    Ok(manifest.status)
}
