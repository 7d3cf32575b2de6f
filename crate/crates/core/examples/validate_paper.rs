use exosuit::config::ToolkitConfig;
use exosuit::validate::{validate_paper, ValidationOptions};

fn main() {
    let report = validate_paper(&ToolkitConfig::knee_default(), &ValidationOptions::default());
    print!("{}", report.render_table());
    std::process::exit(if report.passed { 0 } else { 1 });
}
