#pragma once

#include <string>

#include <smjls/lmi.hpp>

namespace smjls {

/// JSON document with kind, M, margin, eta, rho, nu, c, lambda, optional
/// gamma and stability_nu, solver metadata and X as [{mode, word, matrix}]
/// with 1-based modes and symbols. Doubles are written in shortest
/// round-trip form, so parse_certificate(certificate_to_json(c)) reproduces
/// every matrix entry bit for bit.
std::string certificate_to_json(const Certificate& cert);

/// Throws SchemaError naming the offending path.
Certificate parse_certificate(const std::string& document);

Certificate load_certificate(const std::string& path);
void save_certificate(const Certificate& cert, const std::string& path);

}  // namespace smjls
