#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(rows) = imrl::evalkit::parse_report(text) {
        let again = imrl::evalkit::parse_report(&imrl::evalkit::render_report_csv(&rows)).expect("rendered report parses");
        assert_eq!(again.len(), rows.len());
    }
});
