

import java.io.*;

public class LoanSerializer {
    public static void main(String[] args) {
        Loan[] loans = new Loan[5];
        for (int i = 0; i < loans.length; i++) {
            loans[i] = new Loan(2.5 + i, 5, 1000 * (i + 1));
        }

        try (ObjectOutputStream out = new ObjectOutputStream(
                new FileOutputStream("Exercise17_06.dat"))) {
            for (Loan loan : loans) {
                out.writeObject(loan);
            }
        } catch (IOException ex) {
            ex.printStackTrace();
        }
        System.out.println("Wrote " + loans.length + " loans to " + LoanSerializer.class.getSimpleName());
    }
}
