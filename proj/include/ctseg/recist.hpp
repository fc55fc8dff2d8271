#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctseg/common.hpp"

namespace ctseg {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// RECIST diameter marks: long axis p1-p2, perpendicular short axis p3-p4.
// Coordinates are real-valued pixels, origin at the top-left corner.
struct RecistAnnotation {
    Point2 p1, p2; // long axis endpoints
    Point2 p3, p4; // short axis endpoints

    double long_diameter() const { return distance(p1, p2); }
    double short_diameter() const { return distance(p3, p4); }
    Point2 long_midpoint() const { return {(p1.x + p2.x) / 2.0, (p1.y + p2.y) / 2.0}; }

    RecistAnnotation shifted(double dx, double dy) const {
        RecistAnnotation r = *this;
        r.p1.x += dx; r.p1.y += dy;
        r.p2.x += dx; r.p2.y += dy;
        r.p3.x += dx; r.p3.y += dy;
        r.p4.x += dx; r.p4.y += dy;
        return r;
    }
};

struct AnnotationRow {
    std::string id;
    std::string category;
    RecistAnnotation recist;
};

inline constexpr const char* kAnnotationHeader = "id,category,x1,y1,x2,y2,x3,y3,x4,y4";

inline void write_annotations_csv(const std::vector<AnnotationRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << kAnnotationHeader << "\n";
    out.setf(std::ios::fixed);
    out.precision(3);
    for (const AnnotationRow& r : rows) {
        out << r.id << "," << r.category << ","
            << r.recist.p1.x << "," << r.recist.p1.y << ","
            << r.recist.p2.x << "," << r.recist.p2.y << ","
            << r.recist.p3.x << "," << r.recist.p3.y << ","
            << r.recist.p4.x << "," << r.recist.p4.y << "\n";
    }
    const std::string tmp = path + ".tmp";
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("annotations: cannot write " + tmp);
    f << out.str();
    f.close();
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("annotations: cannot rename " + tmp);
}

inline std::vector<AnnotationRow> read_annotations_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("annotations: cannot open " + path);
    std::vector<AnnotationRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("id,", 0) == 0) continue; // header row
        }
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw FormatError("annotations: expected 10 fields, got " +
                              std::to_string(fields.size()) + " in " + path);
        AnnotationRow r;
        r.id = fields[0];
        r.category = fields[1];
        try {
            r.recist.p1 = {std::stod(fields[2]), std::stod(fields[3])};
            r.recist.p2 = {std::stod(fields[4]), std::stod(fields[5])};
            r.recist.p3 = {std::stod(fields[6]), std::stod(fields[7])};
            r.recist.p4 = {std::stod(fields[8]), std::stod(fields[9])};
        } catch (const std::exception&) {
            throw FormatError("annotations: unparsable coordinates in " + path);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace ctseg
