#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(config) = imrl::trainer::RunConfig::parse(text) {
        let again = imrl::trainer::RunConfig::parse(&config.render()).expect("rendered config parses");
        assert_eq!(again.render(), config.render());
    }
});
