pub mod completeness;
pub mod concentration;
pub mod decode;
pub mod gap;
pub mod selftest;
pub mod validate;

use gug_core::rng::SeedStream;

use crate::Context;

pub(crate) fn stream(ctx: &Context) -> SeedStream {
    SeedStream::new(ctx.seed).named(ctx.command)
}
