#pragma once
// Shared doctest driver: unbuffered stdout so progress survives a timeout kill.

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdio>

int main(int argc, char** argv) {
    setvbuf(stdout, nullptr, _IONBF, 0);
    return doctest::Context(argc, argv).run();
}
