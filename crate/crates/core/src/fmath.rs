//! Float math routed through `std` or `libm` depending on the target.

#![allow(dead_code)]

macro_rules! route {
    ($($name:ident => $libm:ident;)*) => {
        $(
            #[cfg(feature = "std")]
            #[inline]
            pub fn $name(x: f64) -> f64 { f64::$name(x) }
            #[cfg(not(feature = "std"))]
            #[inline]
            pub fn $name(x: f64) -> f64 { libm::$libm(x) }
        )*
    };
}

route! {
    exp => exp;
    ln => log;
    sqrt => sqrt;
    sin => sin;
    cos => cos;
    abs => fabs;
    round => round;
    floor => floor;
    acos => acos;
}

#[cfg(feature = "std")]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    f64::atan2(y, x)
}

#[cfg(not(feature = "std"))]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot_slice(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}
