// mdbook cannot run listings that depend on workspace crates, so every
// chapter is pulled in as the docs of an empty module and `cargo test --doc`
// runs the listings. One module per chapter keeps failures traceable.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/closed-loop.md")]
pub mod closed_loop {}
#[doc = include_str!("src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("src/attacks.md")]
pub mod attacks {}
#[doc = include_str!("src/stability.md")]
pub mod stability {}
#[doc = include_str!("src/live-control.md")]
pub mod live_control {}
#[doc = include_str!("src/service.md")]
pub mod service {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
