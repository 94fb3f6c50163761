//! Configs bundled into the binary.

pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

macro_rules! example {
    ($name:literal, $desc:literal) => {
        Example {
            name: $name,
            description: $desc,
            text: include_str!(concat!("../configs/", $name, ".toml")),
        }
    };
}

pub const EXAMPLES: &[Example] = &[
    example!("ou-benchmark", "linear benchmark A = diag(1,2), eps = 0.1: QR spectrum {-0.1, -0.2}"),
    example!("l96-n7", "Lorenz-96 n = 7 full spectrum and sum rule"),
    example!("l96-n10-sweep", "Lorenz-96 n = 10, lambda_1/eps over eps = 0.5 ... 0.05"),
    example!("gnse-N2", "Galerkin Navier-Stokes N = 2: H^k family, D^k check, exact Lie closure"),
    example!("gnse-distinct-N8", "distinctness scan at N = 8, r = 1"),
    example!("gnse-zn-N4", "forcing propagation Z^n at N = 4"),
    example!("l96-n7-shear", "shear lower bound on the conservative Lorenz-96 flow"),
    example!("l96-n7-simulate", "Lorenz-96 n = 7 trajectory and energy budget"),
    example!("ou-moment", "moment Lyapunov exponents of the linear benchmark"),
    example!("ou-fisher", "Gaussian Fisher information identity"),
];

pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}
