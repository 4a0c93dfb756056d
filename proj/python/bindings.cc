#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "telsm/cost_model.h"
#include "telsm/db.h"
#include "telsm/schema.h"
#include "telsm/transformer_spec.h"

namespace py = pybind11;

namespace telsm {
namespace {

class TelsmError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void Check(const Status& st) {
  if (!st.ok()) throw TelsmError(st.ToString());
}

RecordFormat FormatArg(const std::string& name) {
  auto f = ParseRecordFormat(name);
  if (!f) throw py::value_error("unknown format " + name);
  return *f;
}

// Engine handle; the GIL is dropped around every engine call.
class PyDB {
 public:
  explicit PyDB(const std::map<std::string, std::string>& options) {
    EngineConfig cfg;
    auto kv = options;
    Check(cfg.ApplyKeyValues(&kv));
    if (!kv.empty()) throw py::value_error("unknown option " + kv.begin()->first);
    py::gil_scoped_release nogil;
    Check(DB::Open(cfg, &db_));
  }

  void CreateColumnFamily(const std::string& name, const std::string& schema,
                          const std::string& format) {
    Schema s;
    Check(Schema::Parse(schema, &s));
    Check(db()->CreateColumnFamily(name, s, FormatArg(format)));
  }

  void Link(const std::string& name, const std::string& specs) {
    std::vector<TransformerSpec> parsed;
    Check(TransformerSpec::ParseList(specs, &parsed));
    py::gil_scoped_release nogil;
    Check(db()->LinkTransformers(name, parsed));
  }

  void Insert(const std::string& cf, const std::string& key, const Row& row) {
    py::gil_scoped_release nogil;
    Check(db()->Insert(cf, key, row));
  }

  void Remove(const std::string& cf, const std::string& key) {
    py::gil_scoped_release nogil;
    Check(db()->Remove(cf, key));
  }

  std::optional<Row> Get(const std::string& cf, const std::string& key) {
    Row row;
    Status st;
    {
      py::gil_scoped_release nogil;
      st = db()->ReadPointFull(cf, key, &row);
    }
    if (st.IsNotFound()) return std::nullopt;
    Check(st);
    return row;
  }

  std::optional<Value> GetColumn(const std::string& cf, const std::string& key,
                                 const std::string& column) {
    Value v;
    Status st;
    {
      py::gil_scoped_release nogil;
      st = db()->ReadPointColumn(cf, key, column, &v);
    }
    if (st.IsNotFound()) return std::nullopt;
    Check(st);
    return v;
  }

  std::vector<KeyRow> Scan(const std::string& cf, const std::string& lo, const std::string& hi) {
    std::vector<KeyRow> rows;
    py::gil_scoped_release nogil;
    Check(db()->ReadRangeFull(cf, lo, hi, &rows));
    return rows;
  }

  std::vector<KeyValue> ScanColumn(const std::string& cf, const std::string& lo,
                                   const std::string& hi, const std::string& column) {
    std::vector<KeyValue> out;
    py::gil_scoped_release nogil;
    Check(db()->ReadRangeColumn(cf, lo, hi, column, &out));
    return out;
  }

  std::vector<KeyRow> IndexGet(const std::string& cf, const std::string& column, const Value& v) {
    std::vector<KeyRow> rows;
    py::gil_scoped_release nogil;
    Check(db()->ReadIndexPoint(cf, column, v, &rows));
    return rows;
  }

  std::vector<KeyValue> IndexScan(const std::string& cf, const std::string& column,
                                  const Value& lo, const Value& hi) {
    std::vector<KeyValue> out;
    py::gil_scoped_release nogil;
    Check(db()->ReadIndexRange(cf, column, lo, hi, &out));
    return out;
  }

  void Flush() {
    py::gil_scoped_release nogil;
    Check(db()->Flush());
  }
  void MigrateAll() {
    py::gil_scoped_release nogil;
    Check(db()->MigrateAll());
  }
  uint64_t StoredBytes() { return db()->CurrentVersion()->TotalFileBytes(); }
  std::string DebugString() { return db()->DebugString(); }

  void Close() {
    if (!db_) return;
    py::gil_scoped_release nogil;
    Status st = db_->Close();
    db_.reset();
    Check(st);
  }

 private:
  DB* db() {
    if (!db_) throw TelsmError("database is closed");
    return db_.get();
  }
  std::unique_ptr<DB> db_;
};

cost::Params ParamsArg(const std::map<std::string, std::string>& kv) {
  cost::Params p;
  Check(p.Apply(kv));
  Check(p.Validate());
  return p;
}

}  // namespace
}  // namespace telsm

PYBIND11_MODULE(_telsm, m) {
  using namespace telsm;
  m.doc() = "LSM key-value store with transformations embedded in compaction";
  py::register_exception<TelsmError>(m, "TelsmError");

  py::class_<PyDB>(m, "DB")
      .def(py::init<const std::map<std::string, std::string>&>(), py::arg("options"))
      .def("create_column_family", &PyDB::CreateColumnFamily, py::arg("name"), py::arg("schema"),
           py::arg("format") = "text")
      .def("link", &PyDB::Link, py::arg("name"), py::arg("transformers"))
      .def("insert", &PyDB::Insert, py::arg("cf"), py::arg("key"), py::arg("row"))
      .def("remove", &PyDB::Remove, py::arg("cf"), py::arg("key"))
      .def("get", &PyDB::Get, py::arg("cf"), py::arg("key"))
      .def("get_column", &PyDB::GetColumn, py::arg("cf"), py::arg("key"), py::arg("column"))
      .def("scan", &PyDB::Scan, py::arg("cf"), py::arg("lo"), py::arg("hi"))
      .def("scan_column", &PyDB::ScanColumn, py::arg("cf"), py::arg("lo"), py::arg("hi"),
           py::arg("column"))
      .def("index_get", &PyDB::IndexGet, py::arg("cf"), py::arg("column"), py::arg("value"))
      .def("index_scan", &PyDB::IndexScan, py::arg("cf"), py::arg("column"), py::arg("lo"),
           py::arg("hi"))
      .def("flush", &PyDB::Flush)
      .def("migrate_all", &PyDB::MigrateAll)
      .def("stored_bytes", &PyDB::StoredBytes)
      .def("debug_string", &PyDB::DebugString)
      .def("close", &PyDB::Close);

  m.def(
      "cost_report",
      [](const std::map<std::string, std::string>& params) {
        cost::Report r = cost::CompareReport(ParamsArg(params));
        return py::dict(py::arg("w_cwt") = r.w_cwt, py::arg("w_tec") = r.w_tec,
                        py::arg("pqra_cwt") = r.pqra_cwt, py::arg("pqra_tec") = r.pqra_tec,
                        py::arg("pqrc_cwt") = r.pqrc_cwt, py::arg("pqrc_tec") = r.pqrc_tec,
                        py::arg("rq_cwt") = r.rq_cwt, py::arg("rq_tec") = r.rq_tec,
                        py::arg("score") = r.score, py::arg("beneficial") = r.beneficial);
      },
      py::arg("params"));
  m.def(
      "w_max", [](const std::map<std::string, std::string>& params, bool transformed) {
        cost::Params p = ParamsArg(params);
        return transformed ? cost::WMaxTec(p) : cost::WMaxCwt(p);
      },
      py::arg("params"), py::arg("transformed") = false);
}
