// Regenerates data/survey_fixture.csv from the deterministic synthetic survey.
#include <fstream>
#include <iostream>

#include "latticefwe/survey.hpp"

int main(int argc, char** argv) {
  const char* path = argc > 1 ? argv[1] : "data/survey_fixture.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << path << '\n';
    return 1;
  }
  const auto records = latticefwe::survey::synthetic_survey();
  latticefwe::survey::write_csv(out, records);
  std::cout << "wrote " << records.size() << " records to " << path << '\n';
  return 0;
}
