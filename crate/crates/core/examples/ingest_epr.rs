//! Ingest EPR Core and Polity style files into a 10-year panel.
//!
//! Pass real files, or run without arguments to use a small built-in fixture:
//!
//! ```bash
//! cargo run --example ingest_epr -- EPR-2018.csv p4v2018.csv
//! ```

use std::fs::File;
use std::io::Read;

use powersharing::ingest::{
    attach_openness, build_panel, expand_years, read_epr, read_polity, validate_dataset, EprColumns, OpennessOptions, PanelBuildOptions,
    PolityColumns,
};

const EPR: &str = "\
gwid,statename,from,to,group,groupid,gwgroupid,size,status
500,Uganda,1962,1965,Baganda,1,50001,0.17,SENIOR PARTNER
500,Uganda,1966,1979,Baganda,1,50001,0.17,POWERLESS
500,Uganda,1962,1979,Langi/Acholi,2,50002,0.09,JUNIOR PARTNER
501,Kenya,1963,1978,Kikuyu,1,50101,0.2,DOMINANT
501,Kenya,1963,1978,Luo,2,50102,0.13,JUNIOR PARTNER
501,Kenya,1963,1978,Somali,3,50103,0.02,DISCRIMINATED
";

const POLITY: &str = "\
ccode,year,xropen,xrcomp
500,1962,4,2
500,1963,4,2
500,1971,1,0
501,1963,4,1
501,1970,4,1
";

fn source(arg: Option<String>, fallback: &'static str) -> std::io::Result<Box<dyn Read>> {
    Ok(match arg {
        Some(path) => Box::new(File::open(path)?),
        None => Box::new(fallback.as_bytes()),
    })
}

fn main() -> powersharing::Result<()> {
    let mut args = std::env::args().skip(1);
    let epr = read_epr(source(args.next(), EPR)?, &EprColumns::default())?;
    let polity = read_polity(source(args.next(), POLITY)?, &PolityColumns::default())?;
    let (annual, _) = expand_years(&epr.records)?;

    let full = build_panel(&annual, &PanelBuildOptions { restrict_score_leq_2: false, ..PanelBuildOptions::default() })?;
    print!("{}", validate_dataset(&full.panel, None).to_text());

    let mut panel = build_panel(&annual, &PanelBuildOptions::default())?.panel;
    let openness = attach_openness(&mut panel, &polity, &OpennessOptions::default())?;
    for w in openness.warnings {
        eprintln!("warning: {w}");
    }
    panel.write_csv(std::io::stdout().lock())?;
    Ok(())
}
