// Iteration i reads the element iteration i+1 writes.
int a[100];

int main() {
  int i;
#pragma omp parallel for
  for (i = 0; i < 99; i++)
    a[i] = a[i + 1] + 1;
}
