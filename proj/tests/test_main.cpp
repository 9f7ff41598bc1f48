#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>
#include <spdlog/spdlog.h>

int main(int argc, char** argv) {
    // Request-log lines and construction warnings drown the test report.
    spdlog::set_level(spdlog::level::err);
    return doctest::Context(argc, argv).run();
}
