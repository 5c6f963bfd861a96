//! Keeps the book in `book/` honest: every chapter is attached here as
//! documentation, so its Rust code blocks compile and run under
//! `cargo test --doc`. A chapter edit that breaks an example fails the
//! test suite instead of shipping stale docs.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        mod $name {}
    };
}

chapter!(readme, "../../../README.md");
chapter!(introduction, "../../../book/src/introduction.md");
chapter!(rate_region, "../../../book/src/rate-region.md");
chapter!(schedulers, "../../../book/src/schedulers.md");
chapter!(rate_control, "../../../book/src/rate-control.md");
chapter!(traffic, "../../../book/src/traffic.md");
chapter!(simulation, "../../../book/src/simulation.md");
chapter!(metrics, "../../../book/src/metrics.md");
chapter!(cli, "../../../book/src/cli.md");
