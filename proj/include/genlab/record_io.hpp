#pragma once

/// @file record_io.hpp
/// @brief Line-oriented birth-record stream.
///
/// One record per line: `j i parent_j parent_i clone uncoupled`, where the
/// two parent fields are `-` for records without a dominant parent and the
/// flags are 0/1. Lines starting with `#` are comments.

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <genlab/ga_engine.hpp>

namespace genlab {

class RecordFormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void write_records(std::ostream& out, const std::vector<BirthRecord>& records) {
    for (const auto& r : records) {
        out << r.child.j << ' ' << r.child.i << ' ';
        if (r.dominant_parent) {
            out << r.dominant_parent->j << ' ' << r.dominant_parent->i;
        } else {
            out << "- -";
        }
        out << ' ' << (r.is_clone ? 1 : 0) << ' ' << (r.uncoupled ? 1 : 0) << '\n';
    }
}

inline std::vector<BirthRecord> read_records(std::istream& in) {
    std::vector<BirthRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string j, i, pj, pi, clone, uncoupled, extra;
        if (!(ls >> j >> i >> pj >> pi >> clone >> uncoupled) || (ls >> extra)) {
            throw RecordFormatError("record line " + std::to_string(line_no) +
                                    ": expected 6 fields");
        }
        auto as_int = [&](const std::string& s) {
            try {
                std::size_t used = 0;
                int v = std::stoi(s, &used);
                if (used != s.size()) {
                    throw std::invalid_argument(s);
                }
                return v;
            } catch (const std::logic_error&) {
                throw RecordFormatError("record line " + std::to_string(line_no) +
                                        ": bad integer '" + s + "'");
            }
        };
        auto as_flag = [&](const std::string& s) {
            if (s != "0" && s != "1") {
                throw RecordFormatError("record line " + std::to_string(line_no) +
                                        ": flags must be 0 or 1");
            }
            return s == "1";
        };
        BirthRecord r;
        r.child = NodeId{as_int(i), as_int(j)};
        r.generation = r.child.j;
        if (pj == "-" || pi == "-") {
            if (pj != pi) {
                throw RecordFormatError("record line " + std::to_string(line_no) +
                                        ": parent fields must both be '-'");
            }
        } else {
            r.dominant_parent = NodeId{as_int(pi), as_int(pj)};
        }
        r.is_clone = as_flag(clone);
        r.uncoupled = as_flag(uncoupled);
        records.push_back(r);
    }
    return records;
}

} // namespace genlab
