//! The example languages shipped with the crate, as source text.

pub const STLC: &str = include_str!("../../../languages/stlc.lang");
pub const REFS: &str = include_str!("../../../languages/refs.lang");
pub const LANG_FUNNY: &str = include_str!("../../../languages/langFunny.lang");
pub const APP2: &str = include_str!("../../../languages/app2.lang");
pub const IFLIST: &str = include_str!("../../../languages/iflist.lang");

/// Every fixture with its file stem.
pub const ALL: [(&str, &str); 5] =
    [("stlc", STLC), ("refs", REFS), ("langFunny", LANG_FUNNY), ("app2", APP2), ("iflist", IFLIST)];
