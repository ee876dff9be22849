//! The config parser must never panic on untrusted text, and canonical
//! serialization must round-trip whatever it accepts.

#![no_main]

use libfuzzer_sys::fuzz_target;
use ratemeasure::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        let canonical = cfg.to_text();
        let reparsed = RunConfig::parse(&canonical).expect("canonical text parses");
        assert_eq!(cfg, reparsed, "parse/serialize round trip diverged");
        // Building the model may reject the config, but must not panic.
        let _ = cfg.initial_measure();
        let _ = cfg.simulation();
    }
});
