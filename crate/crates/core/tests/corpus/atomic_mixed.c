// Atomic update mixed with a plain read of the same counter.
int count;

int main() {
#pragma omp parallel
  {
    int mine;
#pragma omp atomic
    count += 1;
    mine = count;
  }
}
