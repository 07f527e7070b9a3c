//! The built-in 3x3 example against its reference values.

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rep = odecond::cli::demo_report(7)?;
    print!("{}", rep.table());
    if !rep.all_pass() {
        std::process::exit(1);
    }
    Ok(())
}
