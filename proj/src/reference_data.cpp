#include "pqpan/reference_data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "builtin_data.hpp"
#include "csv.hpp"
#include "pqpan/errors.hpp"

namespace pqpan {

namespace {

std::string canonical_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == '_') c = '-';
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int level_index(int nist_level) {
  switch (nist_level) {
    case 1: return 0;
    case 3: return 1;
    case 5: return 2;
    default:
      throw UnsupportedScheme("no calibration factor for NIST level " +
                              std::to_string(nist_level));
  }
}

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  return kind == SchemeKind::Kem ? "KEM" : "Signature";
}

std::string_view to_string(TransferOp op) {
  switch (op) {
    case TransferOp::NotifyPk: return "Notify_PK";
    case TransferOp::WriteCt: return "Write_CT";
    case TransferOp::Payload: return "Payload";
  }
  return "?";
}

TransferOp parse_transfer_op(std::string_view text) {
  if (text == "Notify_PK") return TransferOp::NotifyPk;
  if (text == "Write_CT") return TransferOp::WriteCt;
  if (text == "Payload") return TransferOp::Payload;
  throw Error("unknown transfer op: " + std::string(text));
}

SchemeCatalog SchemeCatalog::parse(std::string_view text) {
  auto records = csv::read(text);
  if (records.empty()) throw ParseError(1, 1, "empty scheme table");
  csv::expect_header(records.front(), {"name", "kind", "pk", "sk",
                                       "ct_or_sig_min", "ct_or_sig_max",
                                       "level"});
  SchemeCatalog catalog;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    csv::expect_columns(rec, 7);
    KemParamSet p;
    p.name = rec.fields[0];
    if (rec.fields[1] == "KEM") {
      p.kind = SchemeKind::Kem;
    } else if (rec.fields[1] == "Signature") {
      p.kind = SchemeKind::Signature;
    } else {
      throw ParseError(rec.line, 2, "kind must be KEM or Signature");
    }
    p.pk_size = csv::parse_number<std::size_t>(rec, 2);
    p.sk_size = csv::parse_number<std::size_t>(rec, 3);
    p.ct_or_sig_min = csv::parse_number<std::size_t>(rec, 4);
    p.ct_or_sig_max = csv::parse_number<std::size_t>(rec, 5);
    if (!rec.fields[6].empty()) p.nist_level = csv::parse_number<int>(rec, 6);

    if (p.pk_size == 0 || p.sk_size == 0 || p.ct_or_sig_min == 0) {
      throw ParseError(rec.line, 3, "sizes must be positive");
    }
    if (p.ct_or_sig_max < p.ct_or_sig_min) {
      throw ParseError(rec.line, 6, "ct_or_sig_max below ct_or_sig_min");
    }
    if (p.is_kem() && p.ct_or_sig_max != p.ct_or_sig_min) {
      throw ParseError(rec.line, 6, "KEM ciphertext size must be exact");
    }
    if (p.nist_level && (*p.nist_level < 1 || *p.nist_level > 5)) {
      throw ParseError(rec.line, 7, "level must be within 1..5");
    }
    catalog.schemes_.push_back(std::move(p));
  }
  return catalog;
}

SchemeCatalog SchemeCatalog::from_file(const std::filesystem::path& path) {
  return parse(read_file(path));
}

const SchemeCatalog& SchemeCatalog::builtin() {
  static const SchemeCatalog catalog = parse(builtin::schemes_csv());
  return catalog;
}

const KemParamSet& SchemeCatalog::lookup(std::string_view name) const {
  const std::string key = canonical_name(name);
  for (const auto& s : schemes_) {
    if (canonical_name(s.name) == key) return s;
  }
  throw UnknownScheme(std::string(name));
}

std::vector<KemParamSet> SchemeCatalog::ml_kem() const {
  std::vector<KemParamSet> out;
  for (const auto& s : schemes_) {
    if (s.is_kem() && s.name.starts_with("ML-KEM-")) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.nist_level.value_or(0) < b.nist_level.value_or(0);
  });
  return out;
}

const KemParamSet& lookup_scheme(std::string_view name) {
  return SchemeCatalog::builtin().lookup(name);
}

std::vector<ReferenceEnergyRow> parse_reference_csv(std::string_view text) {
  auto records = csv::read(text);
  if (records.empty()) throw ParseError(1, 1, "empty reference table");
  csv::expect_header(records.front(),
                     {"scheme", "att_mtu", "ll_pdu", "op", "e_theor_uJ",
                      "e_emp_uJ", "delta_pct"});
  std::vector<ReferenceEnergyRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    csv::expect_columns(rec, 7);
    ReferenceEnergyRow row;
    row.scheme = rec.fields[0];
    row.att_mtu = csv::parse_number<int>(rec, 1);
    row.ll_pdu = csv::parse_number<int>(rec, 2);
    if (rec.fields[3] == "Notify_PK") {
      row.op = TransferOp::NotifyPk;
    } else if (rec.fields[3] == "Write_CT") {
      row.op = TransferOp::WriteCt;
    } else {
      throw ParseError(rec.line, 4, "op must be Notify_PK or Write_CT");
    }
    row.e_theor_uj = csv::parse_number<double>(rec, 4);
    row.e_emp_uj = csv::parse_number<double>(rec, 5);
    row.delta_pct = csv::parse_number<double>(rec, 6);
    if (!(row.e_theor_uj > 0.0) || !(row.e_emp_uj > 0.0)) {
      throw ParseError(rec.line, 5, "energies must be positive");
    }

    const double derived = (row.e_emp_uj - row.e_theor_uj) / row.e_emp_uj;
    if (std::abs(derived - row.delta()) > kDeltaTolerance) {
      throw ConsistencyError(
          "row " + std::to_string(rec.line) + " (" + row.scheme + ", ATT " +
          std::to_string(row.att_mtu) + ", LL " + std::to_string(row.ll_pdu) +
          "): stored delta " + two_decimals(row.delta_pct) +
          "% does not match re-derived " + two_decimals(derived * 100.0) + "%");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReferenceEnergyRow> load_reference_table(
    const std::optional<std::filesystem::path>& path) {
  auto rows = path ? parse_reference_csv(read_file(*path))
                   : parse_reference_csv(builtin::reference_energy_csv());
  if (rows.size() != kReferenceRowCount) {
    throw ConsistencyError("reference table must hold " +
                           std::to_string(kReferenceRowCount) + " rows, got " +
                           std::to_string(rows.size()));
  }
  return rows;
}

std::string write_reference_csv(const std::vector<ReferenceEnergyRow>& rows) {
  std::string out = "scheme,att_mtu,ll_pdu,op,e_theor_uJ,e_emp_uJ,delta_pct\n";
  for (const auto& r : rows) {
    out += csv::quote(r.scheme);
    out += ',' + std::to_string(r.att_mtu);
    out += ',' + std::to_string(r.ll_pdu);
    out += ',' + std::string(to_string(r.op));
    out += ',' + two_decimals(r.e_theor_uj);
    out += ',' + two_decimals(r.e_emp_uj);
    out += ',' + two_decimals(r.delta_pct);
    out += '\n';
  }
  return out;
}

double CalibrationFactors::gamma_keygen(int nist_level) const {
  return keygen[level_index(nist_level)];
}

double CalibrationFactors::gamma_decap(int nist_level) const {
  return decap[level_index(nist_level)];
}

void CalibrationFactors::validate() const {
  auto check = [](double g, const char* what) {
    if (!(g >= 1.0)) {
      throw InvalidConfig(std::string("calibration factor ") + what +
                          " must be >= 1");
    }
  };
  for (double g : keygen) check(g, "gamma_keygen");
  for (double g : decap) check(g, "gamma_decap");
  check(comm, "gamma_comm");
}

CalibrationFactors CalibrationFactors::identity() {
  return CalibrationFactors{{1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, 1.0};
}

}  // namespace pqpan
